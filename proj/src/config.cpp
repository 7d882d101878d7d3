#include "nlch/config.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nlch {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for '" + key + "': " + value);
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for '" + key + "': " + value);
    }
}

InitialKind parse_base_kind(const std::string& key, const std::string& name) {
    if (name == "tanh_front") return InitialKind::TanhFront;
    if (name == "gaussian_bump") return InitialKind::GaussianBump;
    if (name == "random_sym") return InitialKind::RandomSym;
    if (name == "constant") return InitialKind::Constant;
    throw ConfigError("config: unknown initial condition for '" + key + "': " + name);
}

std::vector<double> parse_grid(const std::string& key, const std::string& value) {
    std::vector<double> grid;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) grid.push_back(parse_double(key, item));
    }
    if (grid.empty()) throw ConfigError("config: empty grid for '" + key + "'");
    return grid;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> required = {"kernel.c_J", "domain.eta", "domain.L", "domain.n"};

    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "domain" && section != "kernel" && section != "potential" &&
                section != "sim" && section != "sweep")
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string full = section + "." + key;
        required.erase(full);

        if (full == "domain.eta") cfg.sim.eta = parse_double(full, value);
        else if (full == "domain.L") cfg.sim.L = parse_double(full, value);
        else if (full == "domain.n") cfg.sim.n = static_cast<int>(parse_int(full, value));
        else if (full == "kernel.c_J") cfg.sim.c_J = parse_double(full, value);
        else if (full == "potential.family") {
            if (value != "quartic")
                throw ConfigError("config: only the quartic potential family ships, got " + value);
        } else if (full == "sim.eps") cfg.sim.eps = parse_double(full, value);
        else if (full == "sim.lambda") cfg.sim.lambda = parse_double(full, value);
        else if (full == "sim.T") cfg.sim.T = parse_double(full, value);
        else if (full == "sim.dt") cfg.sim.dt = parse_double(full, value);
        else if (full == "sim.scheme") {
            if (value == "rk4") cfg.sim.scheme = Scheme::Rk4;
            else if (value == "semi_implicit") cfg.sim.scheme = Scheme::SemiImplicit;
            else throw ConfigError("config: unknown scheme " + value);
        } else if (full == "sim.initial_condition") {
            if (value.rfind("mollified(", 0) == 0 && value.back() == ')') {
                cfg.sim.ic.kind = InitialKind::Mollified;
                cfg.sim.ic.base = parse_base_kind(full, value.substr(10, value.size() - 11));
            } else {
                cfg.sim.ic.kind = parse_base_kind(full, value);
            }
        } else if (full == "sim.amplitude") cfg.sim.ic.amplitude = parse_double(full, value);
        else if (full == "sim.seed")
            cfg.sim.ic.seed = static_cast<unsigned long long>(parse_int(full, value));
        else if (full == "sim.snapshot_stride")
            cfg.sim.snapshot_stride = static_cast<int>(parse_int(full, value));
        else if (full == "sim.convolution") {
            if (value == "dense") cfg.sim.convolution = ConvPath::Dense;
            else if (value == "fast") cfg.sim.convolution = ConvPath::Fast;
            else throw ConfigError("config: unknown convolution path " + value);
        } else if (full == "sweep.grid") cfg.sweep_grid = parse_grid(full, value);
        else if (full == "sweep.reference") {
            if (value == "direct_P") cfg.reference = EpsReference::DirectP;
            else if (value == "smallest_eps") cfg.reference = EpsReference::SmallestEps;
            else throw ConfigError("config: unknown sweep reference " + value);
        } else if (full == "sweep.snapshots")
            cfg.sweep_snapshots = static_cast<int>(parse_int(full, value));
        else
            throw ConfigError("config: unknown key '" + key + "' in section [" + section + "]");
    }

    if (!required.empty())
        throw ConfigError("config: missing required key " + *required.begin());
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string scheme_name(Scheme s) { return s == Scheme::Rk4 ? "rk4" : "semi_implicit"; }

std::string initial_condition_name(const InitialCondition& ic) {
    auto base = [](InitialKind k) -> std::string {
        switch (k) {
        case InitialKind::TanhFront: return "tanh_front";
        case InitialKind::GaussianBump: return "gaussian_bump";
        case InitialKind::RandomSym: return "random_sym";
        case InitialKind::Constant: return "constant";
        case InitialKind::Mollified: return "mollified";
        }
        return "?";
    };
    if (ic.kind == InitialKind::Mollified) return "mollified(" + base(ic.base) + ")";
    return base(ic.kind);
}

std::string conv_path_name(ConvPath p) { return p == ConvPath::Dense ? "dense" : "fast"; }

} // namespace nlch
