#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbmfg {

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { decoupled_heat, quadratic_mfg, congestion, linear_counterexample, custom };

const char* to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

/// Model parameters (`model.*` keys). Only the keys relevant to the selected
/// model are accepted and echoed.
struct ModelParams {
    double nu = 0.5;                 // diffusion A = nu I
    double coupling = 1.0;           // f = coupling * m
    double kernel_sigma = 0.0;       // 0 selects 4h
    double m0_amplitude = 0.5;       // m0 = 1 + a cos(2 pi x)
    double alpha = 1.0;              // congestion exponent
    double terminal_amplitude = 0.0; // decoupled heat: u_T = a cos(2 pi x)
    double counterexample_alpha = -3.0;
    std::string modes = "c0:1;c1:0.5";
    bool pointwise_final_cost = false;

    bool operator==(const ModelParams&) const = default;
};

/// Flat `key = value` run description; see README for the key list.
struct RunConfig {
    ModelKind model = ModelKind::decoupled_heat;

    int dim = 1;
    int n = 32;
    int nt = 64;
    double T = 0.05;

    std::optional<double> K;
    /// Density floor; defaults to min m0.
    std::optional<double> delta;

    /// 0 selects dim + 3.
    double p = 0.0;
    double tol = 1e-8;
    int max_iter = 100;
    double relaxation = 1.0;

    ModelParams params;

    std::string out_dir = "out";
    bool write_fields = true;

    bool operator==(const RunConfig&) const = default;
};

/// Parses configuration text; '#' starts a comment. Unknown, duplicate or
/// inapplicable keys and out-of-range values raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& c);

/// Checks every numeric parameter against the solver preconditions.
void validate(const RunConfig& c);

/// Comma-separated list of horizons.
std::vector<double> parse_T_list(const std::string& text);

/// Shortest-exact decimal (17 significant digits).
std::string format_double(double v);

}  // namespace fbmfg
