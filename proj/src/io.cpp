#include "nlch/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"

namespace nlch::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

json config_json(const ExperimentConfig& ec) {
    const SimConfig& s = ec.sim;
    json j;
    j["domain"] = {{"eta", s.eta}, {"L", s.L}, {"n", s.n}};
    j["kernel"] = {{"c_J", s.c_J}};
    j["potential"] = {{"family", "quartic"}};
    json sim = {{"eps", s.eps},
                {"T", s.T},
                {"dt", s.dt},
                {"scheme", scheme_name(s.scheme)},
                {"initial_condition", initial_condition_name(s.ic)},
                {"amplitude", s.ic.amplitude},
                {"seed", s.ic.seed},
                {"snapshot_stride", s.snapshot_stride},
                {"convolution", conv_path_name(s.convolution)}};
    if (s.lambda) sim["lambda"] = *s.lambda;
    j["sim"] = sim;
    if (!ec.sweep_grid.empty())
        j["sweep"] = {{"grid", ec.sweep_grid},
                      {"reference", ec.reference == EpsReference::DirectP ? "direct_P" : "smallest_eps"},
                      {"snapshots", ec.sweep_snapshots}};
    return j;
}

class ManifestWriter {
  public:
    ManifestWriter(std::string out_dir, std::string verb)
        : out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
        manifest_["version"] = kVersion;
        manifest_["verb"] = std::move(verb);
        manifest_["prng"] = kPrng;
        manifest_["outputs"] = json::array();
        manifest_["pass"] = nullptr;
        manifest_["abort"] = nullptr;
    }

    void set_config(const ExperimentConfig& ec) { manifest_["config"] = config_json(ec); }
    void add_output(const std::string& name) { manifest_["outputs"].push_back(name); }
    void set_pass(json p) { manifest_["pass"] = std::move(p); }
    void set_extra(const std::string& key, json v) { manifest_[key] = std::move(v); }

    void set_abort(int exit_code, const std::string& message, int step = -1) {
        json a = {{"exit_code", exit_code}, {"message", message}};
        if (step >= 0) a["step"] = step;
        manifest_["abort"] = a;
    }

    bool write() {
        manifest_["wall_clock_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ofstream out(fs::path(out_dir_) / "manifest.json");
        if (!out) return false;
        out << manifest_.dump(2) << "\n";
        return out.good();
    }

  private:
    std::string out_dir_;
    json manifest_;
    std::chrono::steady_clock::time_point start_;
};

bool ensure_out_dir(const std::string& out_dir) {
    if (out_dir.empty()) return false;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) return false;
    const fs::path probe = fs::path(out_dir) / ".write_probe";
    std::ofstream test(probe);
    if (!test) return false;
    test.close();
    fs::remove(probe, ec);
    return true;
}

std::vector<int> probe_indices(int n, int count = 8) {
    std::vector<int> idx;
    for (int p = 0; p < count; ++p)
        idx.push_back(static_cast<int>(std::llround(static_cast<double>(p) *
                                                    static_cast<double>(n - 1) /
                                                    static_cast<double>(count - 1))));
    return idx;
}

} // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    const int n = static_cast<int>(traj.phi.front().size());
    const auto probes = probe_indices(n);
    out << "t";
    for (size_t p = 0; p < probes.size(); ++p) out << ",phi_p" << p;
    out << ",norm_phi_H,norm_phi_V,norm_mu_V,E,r\n";
    for (size_t s = 0; s < traj.times.size(); ++s) {
        const size_t step = static_cast<size_t>(traj.snap_steps[s]);
        out << format_g17(traj.times[s]);
        for (int p : probes) out << "," << format_g17(traj.phi[s][static_cast<size_t>(p)]);
        out << "," << format_g17(std::sqrt(traj.norm_phi_H2[step]));
        out << "," << format_g17(std::sqrt(traj.norm_phi_V2[step]));
        out << "," << format_g17(std::sqrt(traj.norm_mu_V2[step]));
        out << "," << format_g17(traj.energy[step]);
        out << "," << format_g17(traj.residual[step]);
        out << "\n";
    }
    if (!out.good()) throw std::runtime_error("short write on " + path);
}

void write_convergence_csv(const std::string& path, const ConvergenceReport& rep, bool cauchy) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "param,err_Vstar_sq,err_L2H_sq,total\n";
    if (cauchy) {
        for (const auto& pr : rep.pairs)
            out << format_g17(pr.eps) << ":" << format_g17(pr.gamma) << ","
                << format_g17(pr.vstar_sq) << "," << format_g17(pr.l2h_sq) << ","
                << format_g17(pr.d) << "\n";
    } else {
        for (const auto& pt : rep.points)
            out << format_g17(pt.param) << "," << format_g17(pt.err_Vstar_sq) << ","
                << format_g17(pt.err_L2H_sq) << "," << format_g17(pt.total) << "\n";
    }
    if (!out.good()) throw std::runtime_error("short write on " + path);
}

int run_simulate(const std::string& config_path, const std::string& out_dir) {
    if (!ensure_out_dir(out_dir)) {
        std::cerr << "simulate: cannot write to output directory '" << out_dir << "'\n";
        return 2;
    }
    ManifestWriter manifest(out_dir, "simulate");
    try {
        const ExperimentConfig ec = parse_config_file(config_path);
        manifest.set_config(ec);
        const Trajectory traj = solve(ec.sim);
        const std::string csv = (fs::path(out_dir) / "trajectory.csv").string();
        write_trajectory_csv(csv, traj);
        manifest.add_output("trajectory.csv");
        manifest.set_pass(json{{"completed", true},
                               {"steps", traj.steps},
                               {"dt_actual", traj.dt},
                               {"final_energy", traj.energy.back()},
                               {"max_abs_energy_residual",
                                *std::max_element(traj.residual.begin(), traj.residual.end(),
                                                  [](double a, double b) {
                                                      return std::fabs(a) < std::fabs(b);
                                                  })}});
        manifest.add_output("manifest.json");
        manifest.write();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        manifest.set_abort(2, e.what());
        manifest.write();
        return 2;
    } catch (const NumericalAbort& e) {
        std::cerr << "simulate: numerical abort: " << e.what() << "\n";
        manifest.set_abort(3, e.what(), e.step);
        manifest.write();
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        manifest.set_abort(2, e.what());
        manifest.write();
        return 2;
    }
}

int run_sweep(const std::string& verb, const std::string& config_path, const std::string& out_dir,
              const std::string& grid_override, int threads) {
    if (!ensure_out_dir(out_dir)) {
        std::cerr << verb << ": cannot write to output directory '" << out_dir << "'\n";
        return 2;
    }
    ManifestWriter manifest(out_dir, verb);
    try {
        ExperimentConfig ec = parse_config_file(config_path);
        if (!grid_override.empty()) {
            // reuse the config grid parser for the --grid flag
            ExperimentConfig parsed = parse_config_text(
                "[domain]\neta=1\nL=1\nn=3\n[kernel]\nc_J=1\n[sweep]\ngrid = " + grid_override + "\n");
            ec.sweep_grid = parsed.sweep_grid;
        }
        manifest.set_config(ec);
        if (ec.sweep_grid.empty()) throw ConfigError("sweep: no grid given (config [sweep] or --grid)");
        for (size_t i = 1; i < ec.sweep_grid.size(); ++i)
            if (ec.sweep_grid[i] > ec.sweep_grid[i - 1])
                throw ConfigError("sweep: grid must be non-increasing");

        ConvergenceReport rep;
        bool cauchy = false;
        if (verb == "sweep-eps") {
            rep = converge_eps(ec.sim, ec.sweep_grid, ec.reference, ec.sweep_snapshots, threads);
        } else if (verb == "sweep-lambda") {
            rep = converge_lambda(ec.sim, ec.sweep_grid, ec.sweep_snapshots, threads);
        } else if (verb == "cauchy") {
            rep = cauchy_table(ec.sim, ec.sweep_grid, ec.sweep_snapshots, threads);
            cauchy = true;
        } else {
            throw ConfigError("unknown sweep verb " + verb);
        }

        write_convergence_csv((fs::path(out_dir) / "convergence.csv").string(), rep, cauchy);
        manifest.add_output("convergence.csv");

        json fit;
        json flags = {{"degenerate", rep.flagged_degenerate},
                      {"dropped_largest", rep.dropped_largest},
                      {"monotone", rep.monotone}};
        if (cauchy) {
            fit = {{"C", rep.cauchy_C}, {"pairs", rep.pairs.size()}, {"flags", flags}};
        } else if (!rep.fit_valid) {
            fit = {{"fit_omitted", true}, {"flags", flags}};
        } else {
            fit = {{"order_p", rep.fitted_p},
                   {"constant_C_ls", rep.fitted_C},
                   {"constant_C_cover", rep.cover_C},
                   {"flags", flags}};
            if (verb == "sweep-eps") fit["pass"] = json{{"order_ge_0.4", rep.fitted_p >= 0.4}};
            if (verb == "sweep-lambda") {
                bool strictly = true;
                for (size_t i = 1; i < rep.points.size(); ++i)
                    if (rep.points[i].total >= rep.points[i - 1].total) strictly = false;
                fit["pass"] = json{{"errors_strictly_decreasing", strictly}};
            }
        }
        std::ofstream fj(fs::path(out_dir) / "fit.json");
        fj << fit.dump(2) << "\n";
        manifest.add_output("fit.json");
        manifest.set_pass(json{{"completed", true}});
        manifest.add_output("manifest.json");
        manifest.write();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << verb << ": " << e.what() << "\n";
        manifest.set_abort(2, e.what());
        manifest.write();
        return 2;
    } catch (const NumericalAbort& e) {
        std::cerr << verb << ": numerical abort: " << e.what() << "\n";
        manifest.set_abort(3, e.what(), e.step);
        manifest.write();
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << verb << ": " << e.what() << "\n";
        manifest.set_abort(2, e.what());
        manifest.write();
        return 2;
    }
}

int run_validate(const std::string& config_path) {
    try {
        const ExperimentConfig ec = parse_config_file(config_path);
        auto dom = make_domain(ec.sim.eta, ec.sim.L, ec.sim.n);
        const Field phi0 = raw_initial_field(ec.sim, dom);
        const AssumptionReport rep = validate_assumptions(KernelSpec{ec.sim.c_J},
                                                          quartic_potential(), dom, phi0);
        json j = {{"J_L1", rep.j_l1},
                  {"min_a_closed", rep.min_a_closed},
                  {"c0", rep.c0},
                  {"c1", rep.c1},
                  {"c2", rep.c2},
                  {"c3", rep.c3},
                  {"mollifier_vstar_ratio_max", rep.mollifier_vstar_ratio_max},
                  {"pass", rep.pass()}};
        for (const auto& [name, ok] : rep.booleans()) j["assumptions"][name] = ok;
        std::cout << j.dump(2) << "\n";
        return rep.pass() ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "validate: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validate: " << e.what() << "\n";
        return 2;
    }
}

int run_oracle_selftest(const std::string& out_dir, const oracle::OracleBudget& budget,
                        const std::string& inject_fault) {
    oracle::FaultInjection fault = oracle::FaultInjection::None;
    if (inject_fault == "conv-sign") {
        fault = oracle::FaultInjection::FlipConvolutionSign;
    } else if (!inject_fault.empty()) {
        std::cerr << "oracle-selftest: unknown fault '" << inject_fault << "'\n";
        return 2;
    }

    const oracle::SelftestReport rep = oracle::selftest(budget, fault);
    for (const auto& c : rep.checks)
        std::cout << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";

    if (!out_dir.empty()) {
        if (!ensure_out_dir(out_dir)) {
            std::cerr << "oracle-selftest: cannot write to '" << out_dir << "'\n";
            return 2;
        }
        ManifestWriter manifest(out_dir, "oracle-selftest");
        json checks = json::array();
        for (const auto& c : rep.checks)
            checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        manifest.set_extra("checks", checks);
        manifest.set_extra("budget", json{{"s_grid", budget.s_grid},
                                          {"eigen_cap", budget.eigen_cap},
                                          {"dt_divisor", budget.dt_divisor}});
        manifest.set_pass(json{{"all_pass", rep.all_pass()}});
        manifest.write();
    }
    if (!rep.all_pass()) {
        std::cerr << "oracle-selftest: failing checks:";
        for (const auto& c : rep.checks)
            if (!c.pass) std::cerr << " " << c.name;
        std::cerr << "\n";
        return 1;
    }
    return 0;
}

} // namespace nlch::io
