#pragma once

#include "crackflux/charts.hpp"
#include "crackflux/problem.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace crackflux {

// Parsed scenario file: the problem plus chart settings and the key/value echo for manifests.
struct Scenario {
    std::string name = "scenario";
    ProblemPtr problem;
    ChartConfig charts;
    double min_tip_distance = 0;  // required tip-to-boundary distance over [0, T], 0 for the default
    std::vector<std::pair<std::string, std::string>> entries;
};

// Line-oriented `key = value` format, `#` starts a comment. ParseError names line and key.
Scenario parse_scenario(std::istream& is, const std::string& source = "<input>");
Scenario load_scenario(const std::string& path);

struct Diagnostic {
    std::string check;     // short identifier
    std::string bound;     // the inequality checked, in words
    double value = 0;      // measured quantity
    double limit = 0;      // threshold it is compared with
    bool pass = true;
    bool warning = false;  // reported, not counted as failure
};

struct ValidationReport {
    bool pass = true;
    double speed_margin = 0;        // c0 - delta - max sdot^2
    double ellipticity_margin = 0;  // min eigenvalue of A minus c0
    double start_distance = 0, end_distance = 0;  // crack endpoints to the boundary
    double min_tip_distance = 0;
    std::vector<Diagnostic> items;
    const Diagnostic* first_failure() const;
};

struct ValidationOptions {
    double endpoint_tol = 1e-10;   // relative to the diameter
    double arclength_tol = 1e-8;
    int samples = 1000;
    int grid = 100;
    double min_tip_distance = 0;   // 0: 0.05 times the diameter
};

// Never throws: evaluation failures are reported as failed items.
ValidationReport validate_scenario(const Problem& pb, const ValidationOptions& opt = {});

}  // namespace crackflux
