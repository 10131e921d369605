#include "fbmfg/run_config.hpp"

#include "fbmfg/spectral_counterexample.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fbmfg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    }
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || x < -1000000000L || x > 1000000000L) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

/// model.* keys accepted per model kind.
std::set<std::string> model_keys(ModelKind k) {
    switch (k) {
        case ModelKind::decoupled_heat: return {"nu", "m0_amplitude", "terminal_amplitude"};
        case ModelKind::quadratic_mfg: return {"nu", "coupling", "kernel_sigma", "m0_amplitude"};
        case ModelKind::congestion: return {"nu", "coupling", "kernel_sigma", "m0_amplitude", "alpha"};
        case ModelKind::linear_counterexample:
            return {"counterexample_alpha", "modes", "pointwise_final_cost"};
        case ModelKind::custom: return {};
    }
    return {};
}

ModelParams defaults_for(ModelKind k) {
    ModelParams p;
    if (k == ModelKind::decoupled_heat) p.nu = 1.0;
    return p;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::decoupled_heat: return "decoupled-heat";
        case ModelKind::quadratic_mfg: return "quadratic-mfg";
        case ModelKind::congestion: return "congestion";
        case ModelKind::linear_counterexample: return "linear-counterexample";
        case ModelKind::custom: return "custom";
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& s) {
    for (auto k : {ModelKind::decoupled_heat, ModelKind::quadratic_mfg, ModelKind::congestion,
                   ModelKind::linear_counterexample, ModelKind::custom}) {
        if (s == to_string(k)) return k;
    }
    throw ConfigError("unknown model '" + s + "'");
}

RunConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");
    }

    RunConfig c;
    const auto mk = kv.find("model");
    if (mk == kv.end()) throw ConfigError("missing required key 'model'");
    c.model = parse_model_kind(mk->second);
    c.params = defaults_for(c.model);
    const auto allowed = model_keys(c.model);

    for (const auto& [key, v] : kv) {
        if (key == "model") continue;
        else if (key == "grid.dim") c.dim = to_int(key, v);
        else if (key == "grid.n") c.n = to_int(key, v);
        else if (key == "grid.nt") c.nt = to_int(key, v);
        else if (key == "grid.T") c.T = to_double(key, v);
        else if (key == "truncation.K") c.K = to_double(key, v);
        else if (key == "truncation.delta") c.delta = to_double(key, v);
        else if (key == "iteration.p") c.p = to_double(key, v);
        else if (key == "iteration.tol") c.tol = to_double(key, v);
        else if (key == "iteration.max_iter") c.max_iter = to_int(key, v);
        else if (key == "iteration.relaxation") c.relaxation = to_double(key, v);
        else if (key == "outputs.dir") {
            if (v.empty()) throw ConfigError("outputs.dir must not be empty");
            c.out_dir = v;
        } else if (key == "outputs.fields") c.write_fields = to_bool(key, v);
        else if (key.rfind("model.", 0) == 0) {
            const std::string name = key.substr(6);
            if (!allowed.count(name)) {
                throw ConfigError("key '" + key + "' does not apply to model " + to_string(c.model));
            }
            auto& p = c.params;
            if (name == "nu") p.nu = to_double(key, v);
            else if (name == "coupling") p.coupling = to_double(key, v);
            else if (name == "kernel_sigma") p.kernel_sigma = to_double(key, v);
            else if (name == "m0_amplitude") p.m0_amplitude = to_double(key, v);
            else if (name == "alpha") p.alpha = to_double(key, v);
            else if (name == "terminal_amplitude") p.terminal_amplitude = to_double(key, v);
            else if (name == "counterexample_alpha") p.counterexample_alpha = to_double(key, v);
            else if (name == "modes") p.modes = v;
            else if (name == "pointwise_final_cost") p.pointwise_final_cost = to_bool(key, v);
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    validate(c);
    return c;
}

void validate(const RunConfig& c) {
    if (c.model == ModelKind::custom) {
        throw ConfigError("model 'custom' is only available through the library API");
    }
    if (c.dim != 1 && c.dim != 2) throw ConfigError("grid.dim must be 1 or 2");
    if (c.n < 8) throw ConfigError("grid.n must be at least 8");
    if (c.nt < 2) throw ConfigError("grid.nt must be at least 2");
    if (!(c.T > 0.0)) throw ConfigError("grid.T must be positive");
    if (c.K && !(*c.K >= 1.0)) throw ConfigError("truncation.K must be at least 1");
    if (c.delta && !(*c.delta > 0.0)) throw ConfigError("truncation.delta must be positive");
    if (c.p != 0.0 && !(c.p > c.dim + 2.0)) throw ConfigError("iteration.p must exceed dim + 2 (or be 0)");
    if (!(c.tol > 0.0)) throw ConfigError("iteration.tol must be positive");
    if (c.max_iter < 1) throw ConfigError("iteration.max_iter must be at least 1");
    if (!(c.relaxation > 0.0 && c.relaxation <= 1.0)) throw ConfigError("iteration.relaxation must lie in (0, 1]");
    const auto& p = c.params;
    switch (c.model) {
        case ModelKind::decoupled_heat:
        case ModelKind::quadratic_mfg:
        case ModelKind::congestion:
            if (!(p.nu > 0.0)) throw ConfigError("model.nu must be positive");
            if (!(std::abs(p.m0_amplitude) < 1.0)) throw ConfigError("model.m0_amplitude must lie in (-1, 1)");
            if (p.kernel_sigma < 0.0) throw ConfigError("model.kernel_sigma must be nonnegative");
            if (c.model == ModelKind::congestion && !(p.alpha > 0.0)) {
                throw ConfigError("model.alpha must be positive");
            }
            break;
        case ModelKind::linear_counterexample:
            try {
                spectral::parse_modes(p.modes, c.dim);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("model.modes: ") + e.what());
            }
            break;
        case ModelKind::custom: break;
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_text(const RunConfig& c) {
    std::ostringstream os;
    os << "model = " << to_string(c.model) << "\n";
    os << "grid.dim = " << c.dim << "\n";
    os << "grid.n = " << c.n << "\n";
    os << "grid.nt = " << c.nt << "\n";
    os << "grid.T = " << format_double(c.T) << "\n";
    if (c.K) os << "truncation.K = " << format_double(*c.K) << "\n";
    if (c.delta) os << "truncation.delta = " << format_double(*c.delta) << "\n";
    os << "iteration.p = " << format_double(c.p) << "\n";
    os << "iteration.tol = " << format_double(c.tol) << "\n";
    os << "iteration.max_iter = " << c.max_iter << "\n";
    os << "iteration.relaxation = " << format_double(c.relaxation) << "\n";
    const auto keys = model_keys(c.model);
    const auto& p = c.params;
    auto num = [&](const char* name, double v) {
        if (keys.count(name)) os << "model." << name << " = " << format_double(v) << "\n";
    };
    num("nu", p.nu);
    num("coupling", p.coupling);
    num("kernel_sigma", p.kernel_sigma);
    num("m0_amplitude", p.m0_amplitude);
    num("alpha", p.alpha);
    num("terminal_amplitude", p.terminal_amplitude);
    num("counterexample_alpha", p.counterexample_alpha);
    if (keys.count("modes")) os << "model.modes = " << p.modes << "\n";
    if (keys.count("pointwise_final_cost")) {
        os << "model.pointwise_final_cost = " << (p.pointwise_final_cost ? "true" : "false") << "\n";
    }
    os << "outputs.dir = " << c.out_dir << "\n";
    os << "outputs.fields = " << (c.write_fields ? "true" : "false") << "\n";
    return os.str();
}

std::vector<double> parse_T_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in horizon list");
        const double T = to_double("T-list", item);
        if (!(T > 0.0)) throw ConfigError("horizons must be positive");
        out.push_back(T);
    }
    if (out.empty()) throw ConfigError("horizon list is empty");
    return out;
}

}  // namespace fbmfg
