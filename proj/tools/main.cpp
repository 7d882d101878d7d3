// Command-line experiment runner for the nonlocal Cahn-Hilliard laboratory.
#include "CLI11.hpp"

#include "nlch/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nlch - nonlocal Cahn-Hilliard regularization laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", grid;
    int threads = 1;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        if (needs_out) cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "integrate one configuration");
    add_common(simulate, true);

    CLI::App* sweep_eps = app.add_subcommand("sweep-eps", "eps-convergence against a reference run");
    CLI::App* sweep_lambda = app.add_subcommand("sweep-lambda", "lambda-convergence against (P)_eps");
    CLI::App* cauchy = app.add_subcommand("cauchy", "pairwise Cauchy table over an eps grid");
    for (CLI::App* cmd : {sweep_eps, sweep_lambda, cauchy}) {
        add_common(cmd, true);
        cmd->add_option("--grid", grid, "comma-separated parameter grid (overrides config)");
        cmd->add_option("--threads", threads, "concurrent runs");
    }

    CLI::App* validate = app.add_subcommand("validate", "check assumptions for a configuration");
    add_common(validate, false);

    CLI::App* selftest = app.add_subcommand("oracle-selftest", "run all oracle cross-checks");
    nlch::oracle::OracleBudget budget;
    std::string inject_fault;
    std::string selftest_out;
    selftest->add_option("--out", selftest_out, "optional manifest directory");
    selftest->add_option("--s-grid", budget.s_grid, "envelope minimization grid points");
    selftest->add_option("--eigen-cap", budget.eigen_cap, "eigendecomposition size cap");
    selftest->add_option("--dt-divisor", budget.dt_divisor, "reference trajectory dt divisor");
    selftest->add_option("--inject-fault", inject_fault, "test hook: conv-sign")
        ->group(""); // hidden

    CLI11_PARSE(app, argc, argv);

    if (simulate->parsed()) return nlch::io::run_simulate(config_path, out_dir);
    if (sweep_eps->parsed()) return nlch::io::run_sweep("sweep-eps", config_path, out_dir, grid, threads);
    if (sweep_lambda->parsed())
        return nlch::io::run_sweep("sweep-lambda", config_path, out_dir, grid, threads);
    if (cauchy->parsed()) return nlch::io::run_sweep("cauchy", config_path, out_dir, grid, threads);
    if (validate->parsed()) return nlch::io::run_validate(config_path);
    if (selftest->parsed()) return nlch::io::run_oracle_selftest(selftest_out, budget, inject_fault);
    return 2;
}
