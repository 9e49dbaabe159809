#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "gramevo/dataset.hpp"
#include "gramevo/experiment.hpp"
#include "gramevo/network.hpp"
#include "gramevo/report.hpp"
#include "gramevo/stats.hpp"

namespace fs = std::filesystem;
using namespace gramevo;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

/// Thrown for bad user input; maps to exit code 1.
struct Invalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Invalid("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> read_sample(const fs::path& p) {
    auto text = read_file(p);
    for (char& c : text)
        if (c == ',' || c == ';') c = ' ';
    std::istringstream in(text);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw Invalid(p.string() + ": not a number: '" + tok + "'");
        }
    }
    if (out.empty()) throw Invalid(p.string() + ": sample is empty");
    return out;
}

int check_grammar(const Grammar& g, const MacroStructure& m) {
    const auto diags = validate(g, m);
    for (const auto& d : diags) std::cerr << "<" << d.symbol << "> " << d.message << '\n';
    return diags.empty() ? kOk : kInvalid;
}

int cmd_validate(const std::string& config, const std::string& grammar, const std::string& macro) {
    if (!config.empty()) {
        ExperimentConfig cfg;
        ExperimentSetup setup;
        try {
            cfg = load_experiment_config(config);
            setup = load_setup(cfg);
        } catch (const GrammarError& e) {
            std::cerr << cfg.grammar.string() << ":" << e.what() << '\n';
            return kInvalid;
        }
        int status = kOk;
        for (const auto& tc : cfg.tasks) {
            if (tc.evaluator != "trainer") continue;
            const auto lt = load_task(tc, cfg, setup.grammar, setup.macro);
            Rng rng(cfg.seed);
            for (int i = 0; i < 20; ++i) {
                const auto compiled = compile_trainable(decode(sample_individual(setup.grammar, setup.macro, rng), setup.grammar), *lt.task);
                if (!compiled.blueprint) {
                    std::cerr << "task '" << tc.id << "': " << compiled.reason << '\n';
                    status = kInvalid;
                    break;
                }
            }
        }
        if (status == kOk)
            std::cout << "ok: " << config << " (" << cfg.tasks.size() << " task(s), " << cfg.runs << " run(s), lambda "
                      << cfg.engine.lambda << ")\n";
        return status;
    }
    if (grammar.empty()) throw Invalid("validate needs --config or --grammar");
    Grammar g;
    try {
        g = parse_grammar(read_file(grammar));
    } catch (const GrammarError& e) {
        std::cerr << grammar << ":" << e.what() << '\n';
        return kInvalid;
    }
    if (macro.empty()) {
        std::cout << "ok: " << grammar << " (" << g.productions().size() << " productions)\n";
        return kOk;
    }
    const int status = check_grammar(g, parse_macro(macro));
    if (status == kOk) std::cout << "ok: " << grammar << " with " << macro << '\n';
    return status;
}

int cmd_evolve(const std::string& config, const std::string& resume, const std::string& out, std::optional<std::uint64_t> seed,
               bool quiet) {
    ExperimentConfig cfg;
    try {
        cfg = load_experiment_config(config);
    } catch (const ConfigError& e) {
        std::cerr << config << ": " << e.what() << '\n';
        return kInvalid;
    }
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output = out;
    ExperimentOptions opt;
    opt.progress = quiet ? nullptr : &std::cerr;
    if (!resume.empty()) {
        const fs::path ckpt(resume);
        try {
            const auto state = restore(read_file(ckpt));
            std::cerr << "resuming " << ckpt.string() << " at generation " << state.generation << '\n';
        } catch (const CheckpointError& e) {
            std::cerr << ckpt.string() << ": " << e.what() << '\n';
            return kRuntime;
        }
        if (out.empty()) cfg.output = fs::absolute(ckpt).parent_path().parent_path().parent_path();
        opt.resume = true;
    }
    const auto result = run_experiment(cfg, opt);
    std::cout << report_text(load_report(cfg.output));
    std::cout << "\noutput: " << cfg.output.string() << " (knowledge base: " << (cfg.output / "knowledge.kb").string() << ", "
              << result.kb.size() << " champion(s))\n";
    return kOk;
}

int cmd_cross_eval(const std::string& kb_path, const std::string& task_path, int seeds, const std::string& grammar_path,
                   int epochs, std::uint64_t seed) {
    if (seeds < 1) throw Invalid("--seeds must be >= 1");
    const auto kb = load_knowledge_base(read_file(kb_path));
    const auto g = parse_grammar(read_file(grammar_path));
    if (!kb.empty() && kb[0].grammar_fingerprint != fingerprint(g))
        throw Invalid("knowledge base was built with a different grammar than " + grammar_path);
    const auto task = make_task(fs::path(task_path).stem().string(), load_csv(task_path), SplitFractions{0.7, 0.15, 0.15, 0.2}, seed);
    const auto s = retrain_seeds(seed, seeds);
    const Budget budget(epochs, 600);
    json entries = json::array();
    for (const auto& champ : kb.champions()) {
        const auto e = cross_evaluate(champ, g, task, s, budget);
        std::cout << champ.task_id << " -> " << task.id << ": ";
        if (!e.compatible) {
            std::cout << "incompatible (" << e.reason << ")\n";
        } else {
            double sum = 0;
            for (std::size_t i = 0; i < e.accuracies.size(); ++i) {
                std::cout << (i ? " " : "") << e.accuracies[i];
                sum += e.accuracies[i];
            }
            std::cout << "  (mean " << sum / static_cast<double>(e.accuracies.size()) << ")\n";
        }
    }
    return kOk;
}

int cmd_report(const std::string& dir, const std::string& format) {
    const auto data = load_report(dir);
    std::cout << (format == "csv" ? report_csv(data) : report_text(data));
    for (const auto& p : data.problems) std::cerr << "warning: " << p << '\n';
    return kOk;
}

int cmd_stats(const std::string& a_path, const std::string& b_path) {
    const auto a = read_sample(a_path);
    const auto b = read_sample(b_path);
    const auto r = mann_whitney_u(a, b);
    std::cout << "n1=" << r.n1 << " n2=" << r.n2 << " U=" << r.u << " p=" << r.p << " (" << (r.exact ? "exact" : "normal approximation")
              << ") z=" << r.z << " r=" << r.r << '\n';
    std::cout << (r.p < 0.05 ? "significant" : "not significant") << " at alpha = 0.05\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grammar-based neuroevolution with incremental development"};
    app.require_subcommand(1);

    std::string config, grammar, macro, resume, out, kb, task, dir, format = "text", a, b;
    std::optional<std::uint64_t> seed;
    std::uint64_t cross_seed = 0;
    int seeds = 5, epochs = 30;
    bool quiet = false;

    auto* validate_cmd = app.add_subcommand("validate", "Check a grammar, macro-structure or experiment config");
    validate_cmd->add_option("--config", config, "Experiment config (JSON)");
    validate_cmd->add_option("--grammar", grammar, "Grammar file (.grm)");
    validate_cmd->add_option("--macro", macro, "Macro-structure, e.g. [(features,1,30),(learning,1,1)]");

    auto* evolve_cmd = app.add_subcommand("evolve", "Run an experiment (one task or a chain)");
    evolve_cmd->add_option("--config", config, "Experiment config (JSON)")->required();
    evolve_cmd->add_option("--resume", resume, "Checkpoint of an interrupted run; finished runs are kept");
    evolve_cmd->add_option("--out", out, "Output directory (overrides the config)");
    evolve_cmd->add_option("--seed", seed, "Base seed (overrides the config)");
    evolve_cmd->add_flag("--quiet", quiet, "No progress lines");

    auto* cross_cmd = app.add_subcommand("cross-eval", "Retrain knowledge-base champions on a task");
    cross_cmd->add_option("--kb", kb, "Knowledge base (.kb)")->required();
    cross_cmd->add_option("--task", task, "Task CSV")->required();
    cross_cmd->add_option("--seeds", seeds, "Retraining seeds per champion")->capture_default_str();
    cross_cmd->add_option("--grammar", grammar, "Grammar the champions were evolved with")->required();
    cross_cmd->add_option("--epochs", epochs, "Epoch cap per retraining")->capture_default_str();
    cross_cmd->add_option("--seed", cross_seed, "Base seed for split and retraining")->capture_default_str();

    auto* report_cmd = app.add_subcommand("report", "Summarize an experiment directory");
    report_cmd->add_option("--dir", dir, "Experiment output directory")->required();
    report_cmd->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}))->capture_default_str();

    auto* stats_cmd = app.add_subcommand("stats", "Mann-Whitney U test between two samples");
    stats_cmd->add_option("--a", a, "File with the first sample (numbers separated by whitespace or commas)")->required();
    stats_cmd->add_option("--b", b, "File with the second sample")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*validate_cmd) return cmd_validate(config, grammar, macro);
        if (*evolve_cmd) return cmd_evolve(config, resume, out, seed, quiet);
        if (*cross_cmd) return cmd_cross_eval(kb, task, seeds, grammar, epochs, cross_seed);
        if (*report_cmd) return cmd_report(dir, format);
        if (*stats_cmd) return cmd_stats(a, b);
    } catch (const Invalid& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const GrammarError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kRuntime;
}
