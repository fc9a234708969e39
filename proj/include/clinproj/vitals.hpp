#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace clinproj {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One clinical variable: physical (survivable) range, normal (healthy) range,
// optional cap on change per hour, and whether the variable is log-scaled
// before normalization.
//
// Solve-space transform: log-scaled vitals map raw -> log10(raw + 1) first,
// then every vital is affinely scaled so its normal range becomes [0, 1].
struct VitalSpec {
    std::string name;
    double phys_lo = 0.0, phys_hi = 0.0;
    double norm_lo = 0.0, norm_hi = 0.0;
    std::optional<double> max_hourly_change;
    bool log_transformed = false;

    double to_solve(double raw) const;
    double to_raw(double solve) const;

    double solve_lo() const { return to_solve(phys_lo); }
    double solve_hi() const { return to_solve(phys_hi); }
    double normal_mid_raw() const { return 0.5 * (norm_lo + norm_hi); }

    // Hourly cap expressed in solve space. For log-scaled vitals this caps the
    // hourly change of the logged value (a multiplicative cap on raw values).
    std::optional<double> solve_rate() const;

private:
    double scale_denom() const;
};

// Ordered collection of the modeled vitals. The order is load order of the
// ranges config and fixes every downstream layout (windows, feature vectors,
// model artifacts).
class VitalRegistry {
public:
    static VitalRegistry load(const std::string& config_path);

    std::size_t size() const { return specs_.size(); }
    const VitalSpec& at(std::size_t i) const { return specs_[i]; }
    const std::vector<VitalSpec>& specs() const { return specs_; }

    const VitalSpec& lookup(const std::string& name) const;
    // -1 when absent
    int index_of(const std::string& name) const;
    bool has(const std::string& name) const { return index_of(name) >= 0; }

    // Registry restricted to the given vitals (testing / small instances).
    VitalRegistry subset(const std::vector<std::string>& names) const;

    // Fingerprint of the loaded ranges, embedded in model artifacts so a model
    // is never applied on top of a different registry.
    std::uint64_t fingerprint() const { return fingerprint_; }

private:
    std::vector<VitalSpec> specs_;
    std::uint64_t fingerprint_ = 0;

    void validate() const;
    void compute_fingerprint();
};

// Bundled 30-vital registry (ranges table shipped under config/).
const VitalRegistry& standard_registry();

// Directory holding the bundled config files; compile-time default,
// overridable via the CLINPROJ_CONFIG_DIR environment variable.
std::string bundled_config_dir();

}  // namespace clinproj
