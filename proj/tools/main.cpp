// Command-line surface: analyze one trial CSV, run a Monte-Carlo study,
// or validate data + config without estimating.

#include <CLI11.hpp>
#include <iostream>

#include "rct/pipeline.hpp"

namespace {

int run_analyze(const std::string& config_path, const std::string& data_path,
                const std::string& out_path) {
    const rct::AnalysisConfig config = rct::load_analysis_config(config_path);
    rct::LoadDiagnostics diag;
    const rct::TrialDataset data = rct::load_dataset(data_path, config.schema, &diag);
    const std::string report = rct::run_analysis_report(config, data);
    const std::string target = !out_path.empty() ? out_path : config.report_path;
    if (!target.empty()) {
        rct::write_text_file(target, report);
        std::cout << "analysis report written to " << target << " (n=" << diag.n
                  << ", treated=" << diag.n_treated << ", control=" << diag.n_control << ")\n";
    } else {
        std::cout << report;
    }
    return 0;
}

int run_simulate(const std::string& config_path, int jobs_override, const std::string& out_path) {
    rct::SimulationConfig config = rct::load_simulation_config(config_path);
    if (jobs_override > 0) config.options.jobs = jobs_override;
    const rct::MonteCarloReport report =
        rct::run_monte_carlo(config.dgp, config.estimators, config.estimand, config.options);
    const std::string text = rct::simulation_report_json(config, report);
    const std::string target = !out_path.empty() ? out_path : config.report_path;
    if (!target.empty()) {
        rct::write_text_file(target, text);
        std::cout << "simulation report written to " << target << " (" << report.replicates
                  << " replicates)\n";
    } else {
        std::cout << text;
    }
    if (!config.replicates_csv_path.empty())
        rct::write_text_file(config.replicates_csv_path, rct::replicates_csv(report));
    return 0;
}

int run_validate(const std::string& config_path, const std::string& data_path) {
    const rct::AnalysisConfig config = rct::load_analysis_config(config_path);
    const rct::TrialDataset data = rct::load_dataset(data_path, config.schema);
    std::cout << rct::validation_report_json(config, data);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariate-adjusted marginal treatment effect estimation for two-arm trials"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path;
    int jobs = 0;

    auto* analyze = app.add_subcommand("analyze", "Run a configured analysis on a CSV dataset");
    analyze->add_option("--config", config_path, "analysis config (JSON)")->required();
    analyze->add_option("--data", data_path, "trial dataset (CSV)")->required();
    analyze->add_option("--out", out_path, "report path (overrides config output.report_path)");

    auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo study");
    simulate->add_option("--config", config_path, "simulation config (JSON)")->required();
    simulate->add_option("--jobs", jobs, "worker threads (default: config value or 1)");
    simulate->add_option("--out", out_path, "report path (overrides config output.report_path)");

    auto* validate = app.add_subcommand("validate", "Check data + config without estimating");
    validate->add_option("--config", config_path, "analysis config (JSON)")->required();
    validate->add_option("--data", data_path, "trial dataset (CSV)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(analyze)) return run_analyze(config_path, data_path, out_path);
        if (app.got_subcommand(simulate)) return run_simulate(config_path, jobs, out_path);
        if (app.got_subcommand(validate)) return run_validate(config_path, data_path);
    } catch (const rct::Error& e) {
        std::cerr << rct::error_report_json(e);
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "{\n  \"error\": {\n    \"kind\": \"Internal\",\n    \"message\": \""
                  << e.what() << "\"\n  }\n}\n";
        return 1;
    }
    return 0;
}
