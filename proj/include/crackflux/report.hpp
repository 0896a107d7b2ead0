#pragma once

#include "crackflux/charts.hpp"
#include "crackflux/energy.hpp"
#include "crackflux/fields.hpp"
#include "crackflux/quad.hpp"
#include "crackflux/scenario.hpp"
#include "crackflux/sif.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace crackflux {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// Numeric table written with round-trip precision; identical input gives identical bytes.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row);
    std::string str() const;
};

// Output directory, created on construction.
class ReportDir {
public:
    explicit ReportDir(std::filesystem::path dir);
    const std::filesystem::path& path() const { return dir_; }
    void write(const std::string& name, const std::string& text) const;
    void write(const std::string& name, const Json& j) const;
    void write(const std::string& name, const CsvTable& t) const;

private:
    std::filesystem::path dir_;
};

Json to_json(const ChartConfig& c);
Json to_json(const Diagnostic& d);
Json to_json(const ValidationReport& r);
Json to_json(const FondlemTable& t);
Json to_json(const EllipticityAudit& a);
Json to_json(const TipFluxResult& r);
Json to_json(const WBoundAudit& a);
Json to_json(const EnergyReport& r);
Json to_json(const SifEstimate& e);
Json to_json(const SifTrace& s);

CsvTable validation_csv(const ValidationReport& r);
CsvTable fondlem_csv(const FondlemTable& t);
CsvTable ellipticity_csv(const EllipticityAudit& a);
CsvTable tipflux_csv(const TipFluxResult& r);
CsvTable wbound_csv(const WBoundAudit& a);
CsvTable energy_csv(const EnergyReport& r);
CsvTable sif_csv(const SifTrace& s);

// Human-readable validation summary, one line per check.
std::string format_validation(const ValidationReport& r);

// Manifest skeleton: command, version, thread count excluded (outputs do not depend on it).
Json make_manifest(const std::string& command, const Scenario* sc);

}  // namespace crackflux
