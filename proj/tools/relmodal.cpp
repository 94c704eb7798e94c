// relmodal: run relational-state scenarios and write JSON or text reports.
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <relmodal/cli/runner.hpp>

namespace {

enum Exit { ok = 0, task_failure = 1, load_failure = 2 };

struct Options {
    std::string scenario;
    std::string output;
    std::string format = "machine";
    double      tol_norm = relmodal::Tolerances{}.norm;
    double      tol_herm = relmodal::Tolerances{}.herm;
    double      tol_ssr  = relmodal::Tolerances{}.ssr;
    std::uint64_t seed   = 0;
};

relmodal::Tolerances tolerances(const Options &o) {
    relmodal::Tolerances t;
    t.norm = o.tol_norm;
    t.herm = o.tol_herm;
    t.ssr  = o.tol_ssr;
    return t;
}

int write(const Options &o, const std::string &text) {
    if(o.output.empty() || o.output == "-") {
        std::cout << text;
        return 0;
    }
    std::ofstream out(o.output, std::ios::binary);
    if(!out) {
        std::cerr << "error: cannot write '" << o.output << "'\n";
        return 1;
    }
    out << text;
    return 0;
}

void add_common(CLI::App *cmd, Options &o) {
    cmd->add_option("scenario", o.scenario, "scenario file")->required();
    cmd->add_option("--tol-norm", o.tol_norm, "normalization tolerance");
    cmd->add_option("--tol-herm", o.tol_herm, "Hermiticity and isometry tolerance");
    cmd->add_option("--tol-ssr", o.tol_ssr, "superselection off-block tolerance");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Relational states of modal subsystems"};
    app.set_version_flag("--version", std::string(relmodal::version));
    app.require_subcommand(1);

    Options o;
    auto   *run = app.add_subcommand("run", "run every task in a scenario and write a report");
    add_common(run, o);
    run->add_option("--seed", o.seed, "global seed for sampling tasks");
    run->add_option("-o,--output", o.output, "report path (default stdout)");
    run->add_option("--format", o.format, "report format")->check(CLI::IsMember({"text", "machine"}));

    auto *check = app.add_subcommand("check", "load and validate a scenario without running tasks");
    add_common(check, o);

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : load_failure;
    }

    relmodal::cli::Scenario scenario;
    try {
        scenario = relmodal::cli::load_scenario(o.scenario, tolerances(o));
    } catch(const relmodal::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return load_failure;
    }

    if(check->parsed()) {
        std::cout << "ok: " << scenario.spaces.size() << " spaces, " << scenario.states.size() << " states, " << scenario.embeddings.size()
                  << " embeddings, " << scenario.hamiltonians.size() << " hamiltonians, " << scenario.tasks.size() << " tasks\n";
        return ok;
    }

    relmodal::cli::RunOptions opt{tolerances(o), o.seed};
    const auto                report = relmodal::cli::run_scenario(scenario, opt);
    const auto text = o.format == "text" ? relmodal::cli::render_text(report) : relmodal::cli::render_machine(report);
    if(write(o, text) != 0) return task_failure;
    return relmodal::cli::report_ok(report) ? ok : task_failure;
}
