#include "clinproj/vitals.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "clinproj/rng.hpp"
#include "json.hpp"

namespace clinproj {

double VitalSpec::scale_denom() const {
    if (log_transformed)
        return std::log10(norm_hi + 1.0) - std::log10(norm_lo + 1.0);
    return norm_hi - norm_lo;
}

double VitalSpec::to_solve(double raw) const {
    if (log_transformed) {
        if (raw <= -1.0)
            throw std::domain_error(name + ": log-scaled vital requires value > -1, got " +
                                    std::to_string(raw));
        return (std::log10(raw + 1.0) - std::log10(norm_lo + 1.0)) / scale_denom();
    }
    return (raw - norm_lo) / scale_denom();
}

double VitalSpec::to_raw(double solve) const {
    if (log_transformed) {
        double logged = solve * scale_denom() + std::log10(norm_lo + 1.0);
        return std::pow(10.0, logged) - 1.0;
    }
    return solve * scale_denom() + norm_lo;
}

std::optional<double> VitalSpec::solve_rate() const {
    if (!max_hourly_change) return std::nullopt;
    if (log_transformed)
        return std::log10(*max_hourly_change + 1.0) / scale_denom();
    return *max_hourly_change / scale_denom();
}

VitalRegistry VitalRegistry::load(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open vital ranges config: " + config_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed vital ranges config " + config_path + ": " + e.what());
    }
    if (!doc.contains("vitals") || !doc["vitals"].is_array())
        throw ConfigError(config_path + ": missing \"vitals\" array");

    VitalRegistry reg;
    for (const auto& row : doc["vitals"]) {
        VitalSpec s;
        std::string where = row.contains("name") ? row["name"].get<std::string>() : "<unnamed>";
        try {
            s.name = row.at("name").get<std::string>();
            s.phys_lo = row.at("phys_lo").get<double>();
            s.phys_hi = row.at("phys_hi").get<double>();
            s.norm_lo = row.at("norm_lo").get<double>();
            s.norm_hi = row.at("norm_hi").get<double>();
            if (!row.at("rate").is_null()) s.max_hourly_change = row["rate"].get<double>();
            s.log_transformed = row.at("log").get<bool>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("vital ranges config, record \"" + where + "\": " + e.what());
        }
        reg.specs_.push_back(std::move(s));
    }
    reg.validate();
    reg.compute_fingerprint();
    return reg;
}

void VitalRegistry::validate() const {
    std::set<std::string> seen;
    for (const auto& s : specs_) {
        if (!seen.insert(s.name).second)
            throw ConfigError("duplicate vital name: " + s.name);
        if (!(s.phys_lo < s.phys_hi))
            throw ConfigError(s.name + ": physical range is empty");
        if (!(s.norm_lo < s.norm_hi))
            throw ConfigError(s.name + ": normal range is empty");
        // The ranges table has two vitals whose normal range escapes the
        // physical range: FiO2 (normal entirely below phys_lo) and
        // BilirubinTotal (norm_lo below phys_lo). Only the upper side is
        // enforced strictly for them.
        bool lo_exempt = s.name == "FiO2" || s.name == "BilirubinTotal";
        if (!lo_exempt && s.norm_lo < s.phys_lo)
            throw ConfigError(s.name + ": normal range below physical range");
        if (s.name != "FiO2" && s.norm_hi > s.phys_hi)
            throw ConfigError(s.name + ": normal range above physical range");
        if (s.max_hourly_change && *s.max_hourly_change <= 0)
            throw ConfigError(s.name + ": hourly change cap must be positive");
        if (s.log_transformed && s.norm_lo <= -1.0)
            throw ConfigError(s.name + ": log-scaled vital with norm_lo <= -1");
    }
}

void VitalRegistry::compute_fingerprint() {
    std::ostringstream os;
    for (const auto& s : specs_) {
        os << s.name << '|' << s.phys_lo << '|' << s.phys_hi << '|' << s.norm_lo << '|'
           << s.norm_hi << '|' << (s.max_hourly_change ? *s.max_hourly_change : -1.0) << '|'
           << s.log_transformed << '\n';
    }
    std::string bytes = os.str();
    fingerprint_ = fnv1a(bytes.data(), bytes.size());
}

const VitalSpec& VitalRegistry::lookup(const std::string& name) const {
    int idx = index_of(name);
    if (idx < 0) throw ConfigError("unknown vital: " + name);
    return specs_[static_cast<std::size_t>(idx)];
}

int VitalRegistry::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name == name) return static_cast<int>(i);
    return -1;
}

VitalRegistry VitalRegistry::subset(const std::vector<std::string>& names) const {
    VitalRegistry reg;
    for (const auto& n : names) reg.specs_.push_back(lookup(n));
    reg.validate();
    reg.compute_fingerprint();
    return reg;
}

std::string bundled_config_dir() {
    if (const char* env = std::getenv("CLINPROJ_CONFIG_DIR")) return env;
    return CLINPROJ_BUNDLED_CONFIG_DIR;
}

const VitalRegistry& standard_registry() {
    static VitalRegistry reg = VitalRegistry::load(bundled_config_dir() + "/vital_ranges.json");
    return reg;
}

}  // namespace clinproj
