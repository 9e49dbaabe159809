#include "gramevo/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "gramevo/network.hpp"
#include "gramevo/synthetic.hpp"

namespace gramevo {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string read_input(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw ConfigError("cannot read " + p.string());
    return read_file(p);
}

void write_file_atomic(const fs::path& p, std::string_view bytes) {
    fs::create_directories(p.parent_path());
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, p);
}

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError("unknown key '" + k + "' in " + std::string(where));
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return (base / p).lexically_normal();
}

Budget read_budget(const json& j, const char* where, Budget fallback) {
    check_keys(j, where, {"max_epochs", "max_wall_seconds"});
    int epochs = fallback.max_epochs;
    double wall = fallback.max_wall_seconds;
    read(j, "max_epochs", epochs);
    read(j, "max_wall_seconds", wall);
    return Budget(epochs, wall);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    if (tasks.empty()) throw std::invalid_argument("task chain is empty");
    if (grammar.empty()) throw std::invalid_argument("grammar path missing");
    if (macro.empty()) throw std::invalid_argument("macro-structure missing");
    engine.validate();
    split.validate();
    if (cross_eval.seeds < 1) throw std::invalid_argument("cross_eval.seeds must be >= 1");
    std::vector<std::string> seen;
    for (const auto& t : tasks) {
        if (t.id.empty() || t.id.find_first_of("/\\ ") != std::string::npos)
            throw std::invalid_argument("task id '" + t.id + "' must be nonempty without spaces or slashes");
        if (std::find(seen.begin(), seen.end(), t.id) != seen.end()) throw std::invalid_argument("duplicate task id '" + t.id + "'");
        seen.push_back(t.id);
        if (t.generations < 0) throw std::invalid_argument("task '" + t.id + "': generations must be >= 0");
        if (t.evaluator == "trainer") {
            if (t.dataset.empty()) throw std::invalid_argument("task '" + t.id + "': trainer task needs a dataset");
        } else if (t.evaluator == "synthetic") {
            if (t.target_file.empty() == !t.target_seed.has_value())
                throw std::invalid_argument("task '" + t.id + "': synthetic task needs exactly one of target_file, target_seed");
        } else {
            throw std::invalid_argument("task '" + t.id + "': unknown evaluator '" + t.evaluator + "'");
        }
    }
}

ExperimentConfig parse_experiment_config(std::string_view text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    try {
        check_keys(j, "config", {"grammar", "macro", "runs", "seed", "output", "compare_scratch", "initial_kb", "split", "engine",
                                 "cross_eval", "tasks"});
        std::string path;
        read(j, "grammar", path);
        c.grammar = resolve(base_dir, path);
        read(j, "macro", c.macro);
        read(j, "runs", c.runs);
        read(j, "seed", c.seed);
        if (j.contains("output")) c.output = resolve(base_dir, j["output"].get<std::string>());
        read(j, "compare_scratch", c.compare_scratch);
        if (j.contains("initial_kb")) c.initial_kb = resolve(base_dir, j["initial_kb"].get<std::string>());
        if (auto it = j.find("split"); it != j.end()) {
            check_keys(*it, "split", {"train", "validation", "test", "holdout"});
            read(*it, "train", c.split.train);
            read(*it, "validation", c.split.validation);
            read(*it, "test", c.split.test);
            read(*it, "holdout", c.split.holdout);
        }
        if (auto it = j.find("engine"); it != j.end()) {
            const auto& e = *it;
            check_keys(e, "engine", {"lambda", "generations", "budget", "budget_growth_patience", "budget_growth_factor", "mutation"});
            read(e, "lambda", c.engine.lambda);
            read(e, "generations", c.engine.generations);
            read(e, "budget_growth_patience", c.engine.budget_growth_patience);
            read(e, "budget_growth_factor", c.engine.budget_growth_factor);
            if (e.contains("budget")) c.engine.budget0 = read_budget(e["budget"], "engine.budget", c.engine.budget0);
            if (auto m = e.find("mutation"); m != e.end()) {
                check_keys(*m, "engine.mutation", {"add_unit", "duplicate_unit", "remove_unit", "grammatical", "kb_duplicate_share",
                                                   "float_sigma_fraction"});
                read(*m, "add_unit", c.engine.mutation.add_rate);
                read(*m, "duplicate_unit", c.engine.mutation.duplicate_rate);
                read(*m, "remove_unit", c.engine.mutation.remove_rate);
                read(*m, "grammatical", c.engine.mutation.grammatical_rate);
                read(*m, "kb_duplicate_share", c.engine.mutation.kb_duplicate_share);
                read(*m, "float_sigma_fraction", c.engine.mutation.float_sigma_fraction);
            }
        }
        if (auto it = j.find("cross_eval"); it != j.end()) {
            check_keys(*it, "cross_eval", {"enabled", "seeds", "budget"});
            read(*it, "enabled", c.cross_eval.enabled);
            read(*it, "seeds", c.cross_eval.seeds);
            if (it->contains("budget")) c.cross_eval.budget = read_budget((*it)["budget"], "cross_eval.budget", c.cross_eval.budget);
        }
        for (const auto& t : j.value("tasks", json::array())) {
            check_keys(t, "task", {"id", "evaluator", "dataset", "target_file", "target_seed", "generations"});
            TaskConfig tc;
            read(t, "id", tc.id);
            read(t, "evaluator", tc.evaluator);
            if (t.contains("dataset")) tc.dataset = resolve(base_dir, t["dataset"].get<std::string>());
            if (t.contains("target_file")) tc.target_file = resolve(base_dir, t["target_file"].get<std::string>());
            if (t.contains("target_seed")) tc.target_seed = t["target_seed"].get<std::uint64_t>();
            read(t, "generations", tc.generations);
            c.tasks.push_back(std::move(tc));
        }
        c.validate();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    return parse_experiment_config(read_input(path), path.parent_path());
}

json experiment_config_json(const ExperimentConfig& c) {
    const auto& m = c.engine.mutation;
    json tasks = json::array();
    for (const auto& t : c.tasks) {
        json tj{{"id", t.id}, {"evaluator", t.evaluator}, {"generations", t.generations}};
        if (!t.dataset.empty()) tj["dataset"] = t.dataset.string();
        if (!t.target_file.empty()) tj["target_file"] = t.target_file.string();
        if (t.target_seed) tj["target_seed"] = *t.target_seed;
        tasks.push_back(tj);
    }
    json j{{"grammar", c.grammar.string()},
           {"macro", c.macro},
           {"runs", c.runs},
           {"seed", c.seed},
           {"output", c.output.string()},
           {"compare_scratch", c.compare_scratch},
           {"split", {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}, {"holdout", c.split.holdout}}},
           {"engine",
            {{"lambda", c.engine.lambda},
             {"generations", c.engine.generations},
             {"budget", c.engine.budget0},
             {"budget_growth_patience", c.engine.budget_growth_patience},
             {"budget_growth_factor", c.engine.budget_growth_factor},
             {"mutation",
              {{"add_unit", m.add_rate},
               {"duplicate_unit", m.duplicate_rate},
               {"remove_unit", m.remove_rate},
               {"grammatical", m.grammatical_rate},
               {"kb_duplicate_share", m.kb_duplicate_share},
               {"float_sigma_fraction", m.float_sigma_fraction}}}}},
           {"cross_eval", {{"enabled", c.cross_eval.enabled}, {"seeds", c.cross_eval.seeds}, {"budget", c.cross_eval.budget}}},
           {"tasks", tasks}};
    if (!c.initial_kb.empty()) j["initial_kb"] = c.initial_kb.string();
    return j;
}

ExperimentSetup load_setup(const ExperimentConfig& cfg) {
    ExperimentSetup s{parse_grammar(read_input(cfg.grammar)), parse_macro(cfg.macro), {}};
    if (auto diags = validate(s.grammar, s.macro); !diags.empty()) {
        std::string msg = "grammar/macro validation failed:";
        for (const auto& d : diags) msg += "\n  <" + d.symbol + "> " + d.message;
        throw ConfigError(msg);
    }
    if (!cfg.initial_kb.empty()) {
        s.initial_kb = load_knowledge_base(read_input(cfg.initial_kb));
        s.initial_kb.check_compatible(s.grammar, s.macro);
    }
    return s;
}

LoadedTask load_task(const TaskConfig& tc, const ExperimentConfig& cfg, const Grammar& g, const MacroStructure& m) {
    LoadedTask lt{tc, nullptr, nullptr};
    if (tc.evaluator == "trainer") {
        auto task = std::make_shared<Task>(make_task(tc.id, load_csv(tc.dataset), cfg.split, derive_seed(cfg.seed, 0x5eed)));
        lt.task = task;
        lt.evaluator = std::make_shared<TrainerEvaluator>(task);
    } else {
        Phenotype target;
        if (!tc.target_file.empty()) {
            target = parse_phenotype(read_input(tc.target_file));
        } else {
            Rng rng(*tc.target_seed);
            target = decode(sample_individual(g, m, rng), g);
        }
        lt.evaluator = std::make_shared<SyntheticEvaluator>(TargetSpec::from_phenotype(std::move(target), g));
    }
    return lt;
}

void to_json(json& j, const RunSummary& s) {
    j = json{{"setup", s.setup}, {"task", s.task}, {"run", s.run}, {"seed", s.seed}, {"status", s.ok ? "ok" : "failed"},
             {"generations", s.generations}};
    if (s.ok) {
        j["best_fitness"] = s.champion.fitness;
        j["final_test_accuracy"] = s.champion.meta.final_test_accuracy;
        j["champion"] = s.champion;
    } else {
        j["error"] = s.error;
    }
}

void from_json(const json& j, RunSummary& s) {
    j.at("setup").get_to(s.setup);
    j.at("task").get_to(s.task);
    j.at("run").get_to(s.run);
    j.at("seed").get_to(s.seed);
    s.ok = j.at("status").get<std::string>() == "ok";
    j.at("generations").get_to(s.generations);
    if (s.ok)
        j.at("champion").get_to(s.champion);
    else
        j.at("error").get_to(s.error);
}

void to_json(json& j, const CrossEvalEntry& e) {
    j = json{{"champion_task", e.champion_task}, {"target_task", e.target_task}, {"compatible", e.compatible},
             {"accuracies", e.accuracies}};
    if (!e.reason.empty()) j["reason"] = e.reason;
}

void from_json(const json& j, CrossEvalEntry& e) {
    j.at("champion_task").get_to(e.champion_task);
    j.at("target_task").get_to(e.target_task);
    j.at("compatible").get_to(e.compatible);
    j.at("accuracies").get_to(e.accuracies);
    e.reason = j.value("reason", "");
}

const RunSummary* TaskOutcome::champion() const {
    const RunSummary* best = nullptr;
    for (const auto& r : runs) {
        if (r.ok && r.champion.valid() && (!best || r.champion.fitness > best->champion.fitness)) best = &r;
    }
    return best;
}

fs::path run_path(const fs::path& out, const std::string& setup, const std::string& task, int run, const char* extension) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%02d%s", run, extension);
    return out / setup / task / name;
}

std::vector<std::uint64_t> retrain_seeds(std::uint64_t base, int count) {
    std::vector<std::uint64_t> out;
    for (int i = 0; i < count; ++i) out.push_back(derive_seed(base, 0xc405, static_cast<std::uint64_t>(i)));
    return out;
}

CrossEvalEntry cross_evaluate(const ChampionRecord& champion, const Grammar& g, const Task& target,
                              std::span<const std::uint64_t> seeds, const Budget& budget) {
    CrossEvalEntry e{champion.task_id, target.id, false, {}, {}};
    const auto compiled = compile_trainable(decode(champion.individual, g), target);
    if (!compiled.blueprint) {
        e.reason = compiled.reason;
        return e;
    }
    e.compatible = true;
    e.accuracies.resize(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const auto r = train_and_score(*compiled.blueprint, target, budget, seeds[i]);
        if (r.meta.stopped_by == StopReason::Invalid) {
            e.compatible = false;
            e.reason = "retraining failed: " + r.meta.reason;
            e.accuracies.clear();
            return e;
        }
        e.accuracies[i] = r.meta.final_test_accuracy >= 0 ? r.meta.final_test_accuracy : r.fitness;
    }
    return e;
}

namespace {

struct Progress {
    std::ostream* out;
    template <class... Args>
    void operator()(const Args&... args) const {
        if (!out) return;
        ((*out) << ... << args) << '\n';
        out->flush();
    }
};

RunSummary execute_run(const ExperimentConfig& cfg, const std::string& setup, const LoadedTask& lt, const RunContext& ctx,
                       int run, bool resume) {
    RunSummary s;
    s.setup = setup;
    s.task = lt.config.id;
    s.run = run;
    s.seed = cfg.seed + static_cast<std::uint64_t>(run);

    const auto summary_file = run_path(cfg.output, setup, s.task, run, ".json");
    const auto log_file = run_path(cfg.output, setup, s.task, run, ".jsonl");
    const auto ckpt_file = run_path(cfg.output, setup, s.task, run, ".ckpt");
    if (resume && fs::exists(summary_file)) {
        auto done = json::parse(read_file(summary_file)).get<RunSummary>();
        if (done.ok) return done;
    }

    EngineConfig ec = cfg.engine;
    ec.seed = s.seed;
    if (lt.config.generations > 0) ec.generations = lt.config.generations;

    fs::create_directories(log_file.parent_path());
    std::ofstream log;
    auto persist = [&](const EngineState& st) {
        log << record_to_json_line(st.history.back());
        log.flush();
        write_file_atomic(ckpt_file, checkpoint(st));
    };

    try {
        EngineState state;
        log.open(log_file, std::ios::binary | std::ios::trunc);
        if (resume && fs::exists(ckpt_file)) {
            state = restore(read_file(ckpt_file));
            log << run_log(state);
        } else {
            state = init_run(ec, ctx);
            persist(state);
        }
        gramevo::resume(state, ec, ctx, persist);
        s.ok = state.parent.valid();
        s.generations = state.generation;
        s.champion = state.parent;
        if (!s.ok) s.error = "final parent invalid: " + state.parent.meta.reason;
    } catch (const std::exception& e) {
        s.ok = false;
        s.error = e.what();
    }
    write_file_atomic(summary_file, json(s).dump(2) + "\n");
    return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opt) {
    cfg.validate();
    const Progress say{opt.progress};
    const auto setup = load_setup(cfg);
    fs::create_directories(cfg.output);
    write_file_atomic(cfg.output / "experiment.json", experiment_config_json(cfg).dump(2) + "\n");
    if (cfg.split.validation == 0) say("warning: validation fraction is 0; early stopping is disabled");

    std::vector<LoadedTask> tasks;
    for (const auto& tc : cfg.tasks) tasks.push_back(load_task(tc, cfg, setup.grammar, setup.macro));

    ExperimentResult result;
    result.kb = setup.initial_kb;
    const KnowledgeBase empty;
    for (const auto& lt : tasks) {
        std::vector<std::pair<std::string, const KnowledgeBase*>> setups{{kIncrementalSetup, &result.kb}};
        if (cfg.compare_scratch && !result.kb.empty()) setups.emplace_back(kScratchSetup, &empty);
        const KnowledgeBase kb_for_task = result.kb;
        for (auto& [name, kbp] : setups) {
            const KnowledgeBase& kb = name == kIncrementalSetup ? kb_for_task : *kbp;
            const RunContext ctx{setup.grammar, setup.macro, kb, *lt.evaluator};
            TaskOutcome outcome{name, lt.config.id, {}};
            for (int i = 0; i < cfg.runs; ++i) {
                auto s = execute_run(cfg, name, lt, ctx, i, opt.resume);
                if (s.ok)
                    say("[", lt.config.id, " | ", name, "] run ", i + 1, "/", cfg.runs, ": fitness ", s.champion.fitness,
                        " after ", s.generations, " generations");
                else
                    say("[", lt.config.id, " | ", name, "] run ", i + 1, "/", cfg.runs, " failed: ", s.error);
                outcome.runs.push_back(std::move(s));
            }
            if (!outcome.champion()) throw ExperimentError("every run of task '" + lt.config.id + "' (" + name + ") failed");
            result.outcomes.push_back(std::move(outcome));
        }
        const auto& chain = *std::find_if(result.outcomes.begin(), result.outcomes.end(), [&](const TaskOutcome& o) {
            return o.task == lt.config.id && o.setup == kIncrementalSetup;
        });
        result.kb = add_champion(kb_for_task, lt.config.id, chain.champion()->champion, setup.grammar, setup.macro);
        write_file_atomic(cfg.output / "knowledge.kb", save_knowledge_base(result.kb));
    }

    if (cfg.cross_eval.enabled) {
        const auto seeds = retrain_seeds(cfg.seed, cfg.cross_eval.seeds);
        for (const auto& champ : result.kb.champions()) {
            for (const auto& lt : tasks) {
                if (!lt.task) continue;
                result.cross.push_back(cross_evaluate(champ, setup.grammar, *lt.task, seeds, cfg.cross_eval.budget));
                const auto& e = result.cross.back();
                say("[cross-eval] ", e.champion_task, " -> ", e.target_task, e.compatible ? "" : (": incompatible (" + e.reason + ")"));
            }
        }
        json doc{{"seeds", seeds}, {"budget", cfg.cross_eval.budget}, {"entries", result.cross}};
        write_file_atomic(cfg.output / "crosseval.json", doc.dump(2) + "\n");
    }
    return result;
}

}  // namespace gramevo
