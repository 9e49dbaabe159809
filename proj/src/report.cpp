#include "gramevo/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace gramevo {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Summary {
    std::size_t n = 0;
    double mean = 0;
    double sd = 0;
};

Summary summarize(const std::vector<double>& v) {
    Summary s;
    s.n = v.size();
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string mean_sd(const Summary& s) {
    if (s.n == 0) return "n/a";
    std::string out = fmt(s.mean) + " +- " + fmt(s.sd);
    if (s.n == 1) out += " (n=1)";
    return out;
}

std::vector<double> fitnesses(const SetupTask& g) {
    std::vector<double> v;
    for (const auto& r : g.runs) v.push_back(r.best_fitness());
    return v;
}

std::vector<double> test_accuracies(const SetupTask& g) {
    std::vector<double> v;
    for (const auto& r : g.runs)
        if (r.final_test_accuracy() >= 0) v.push_back(r.final_test_accuracy());
    return v;
}

const SetupTask* find(const ReportData& d, const std::string& setup, const std::string& task) {
    for (const auto& g : d.groups)
        if (g.setup == setup && g.task == task) return &g;
    return nullptr;
}

std::vector<std::string> setups_of(const ReportData& d, const std::string& task) {
    std::vector<std::string> out;
    for (const auto& g : d.groups)
        if (g.task == task) out.push_back(g.setup);
    return out;
}

std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

struct Table {
    std::vector<std::vector<std::string>> rows;

    std::string render() const {
        std::vector<std::size_t> w;
        for (const auto& r : rows) {
            if (w.size() < r.size()) w.resize(r.size(), 0);
            for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
        }
        std::string out;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            std::string line;
            for (std::size_t i = 0; i < rows[k].size(); ++i) line += "  " + pad(rows[k][i], w[i]);
            while (!line.empty() && line.back() == ' ') line.pop_back();
            out += line + '\n';
            if (k == 0) {
                std::size_t total = 0;
                for (auto x : w) total += x + 2;
                out += "  " + std::string(total - 2, '-') + '\n';
            }
        }
        return out;
    }
};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string tagged_listing(const GenerationRecord& r) {
    std::string out;
    std::size_t i = 0, pos = 0;
    while (pos < r.phenotype.size()) {
        auto nl = r.phenotype.find('\n', pos);
        const auto line = r.phenotype.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? r.phenotype.size() : nl + 1;
        const std::string tag = i < r.provenance.size() ? r.provenance[i] : "?";
        out += "    [" + tag + "] " + line + '\n';
        ++i;
    }
    return out;
}

}  // namespace

std::optional<int> RunLog::generations_to(double threshold) const {
    for (const auto& r : history)
        if (r.best_fitness >= threshold) return r.generation;
    return std::nullopt;
}

ReportData load_report(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ReportError("not a directory: " + dir.string());
    ReportData d;
    try {
        const auto cfg = json::parse(slurp(dir / "experiment.json"));
        for (const auto& t : cfg.at("tasks")) d.task_order.push_back(t.at("id").get<std::string>());
        d.base_seed = cfg.at("seed").get<std::uint64_t>();
    } catch (const std::exception& e) {
        d.problems.push_back("experiment.json: " + std::string(e.what()));
    }

    std::vector<fs::path> setup_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) setup_dirs.push_back(e.path());
    std::sort(setup_dirs.begin(), setup_dirs.end());
    for (const auto& sd : setup_dirs) {
        std::vector<fs::path> task_dirs;
        for (const auto& e : fs::directory_iterator(sd))
            if (e.is_directory()) task_dirs.push_back(e.path());
        std::sort(task_dirs.begin(), task_dirs.end());
        for (const auto& td : task_dirs) {
            SetupTask g{sd.filename().string(), td.filename().string(), {}, {}};
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(td)) files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                const auto name = f.filename().string();
                if (name.rfind("run_", 0) != 0) continue;
                const int run = std::atoi(name.c_str() + 4);
                const auto rel = fs::relative(f, dir).string();
                if (f.extension() == ".json") {
                    try {
                        const auto s = json::parse(slurp(f));
                        if (s.at("status").get<std::string>() != "ok")
                            g.failures.push_back(name.substr(0, name.size() - 5) + ": " + s.value("error", "unknown error"));
                    } catch (const std::exception& e) {
                        d.problems.push_back(rel + ": " + e.what());
                    }
                } else if (f.extension() == ".jsonl") {
                    try {
                        RunLog rl{run, parse_run_log(slurp(f))};
                        if (rl.history.empty()) throw std::runtime_error("empty log");
                        if (rl.best_fitness() < 0) throw std::runtime_error("final parent invalid");
                        g.runs.push_back(std::move(rl));
                    } catch (const std::exception& e) {
                        d.problems.push_back(rel + ": " + e.what());
                    }
                }
            }
            if (!g.runs.empty() || !g.failures.empty()) d.groups.push_back(std::move(g));
        }
    }
    if (fs::exists(dir / "crosseval.json")) {
        try {
            json::parse(slurp(dir / "crosseval.json")).at("entries").get_to(d.cross);
        } catch (const std::exception& e) {
            d.problems.push_back("crosseval.json: " + std::string(e.what()));
        }
    }
    if (std::none_of(d.groups.begin(), d.groups.end(), [](const SetupTask& g) { return !g.runs.empty(); }))
        throw ReportError("no usable run logs under " + dir.string());

    std::set<std::string> known(d.task_order.begin(), d.task_order.end());
    for (const auto& g : d.groups)
        if (known.insert(g.task).second) d.task_order.push_back(g.task);
    std::stable_sort(d.groups.begin(), d.groups.end(), [&](const SetupTask& a, const SetupTask& b) {
        auto ia = std::find(d.task_order.begin(), d.task_order.end(), a.task) - d.task_order.begin();
        auto ib = std::find(d.task_order.begin(), d.task_order.end(), b.task) - d.task_order.begin();
        if (ia != ib) return ia < ib;
        return a.setup < b.setup;
    });
    return d;
}

const RunLog& median_run(const SetupTask& g) {
    if (g.runs.empty()) throw std::invalid_argument("no runs in " + g.setup + "/" + g.task);
    std::vector<const RunLog*> order;
    for (const auto& r : g.runs) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](const RunLog* a, const RunLog* b) {
        if (a->best_fitness() != b->best_fitness()) return a->best_fitness() < b->best_fitness();
        return a->run < b->run;
    });
    return *order[(order.size() - 1) / 2];
}

std::vector<int> snapshot_generations(int last) {
    const int first = std::min(1, last);
    std::vector<int> out{first, std::max(first, last / 2), last};
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

struct Comparison {
    std::string task;
    std::string a;
    std::string b;
    StatsResult stats;
};

std::vector<Comparison> comparisons(const ReportData& d) {
    std::vector<Comparison> out;
    for (const auto& task : d.task_order) {
        const auto setups = setups_of(d, task);
        for (std::size_t i = 0; i < setups.size(); ++i) {
            for (std::size_t j = i + 1; j < setups.size(); ++j) {
                const auto* ga = find(d, setups[i], task);
                const auto* gb = find(d, setups[j], task);
                if (ga->runs.empty() || gb->runs.empty()) continue;
                const auto fa = fitnesses(*ga), fb = fitnesses(*gb);
                out.push_back({task, setups[i], setups[j], mann_whitney_u(fa, fb)});
            }
        }
    }
    return out;
}


template <class Metric>
bool highest_mean(const ReportData& d, const SetupTask& g, Metric metric) {
    const auto setups = setups_of(d, g.task);
    if (setups.size() < 2) return false;
    const auto mine = summarize(metric(g));
    if (mine.n == 0) return false;
    for (const auto& s : setups) {
        if (s == g.setup) continue;
        const auto other = summarize(metric(*find(d, s, g.task)));
        if (other.n > 0 && other.mean >= mine.mean) return false;
    }
    return true;
}

std::string bold(std::string s, bool on) { return on ? "**" + s + "**" : s; }

}  // namespace

std::string report_text(const ReportData& d) {
    std::ostringstream out;
    out << "Experiment report (base seed " << d.base_seed << "; run i uses seed " << d.base_seed << " + i)\n\n";

    out << "Average performance per setup (mean +- sd over runs; ** marks the highest mean per task)\n";
    Table t1{{{"task", "setup", "runs", "evo fitness", "final-test accuracy", "gens to best"}}};
    for (const auto& g : d.groups) {
        const auto f = summarize(fitnesses(g));
        const auto a = summarize(test_accuracies(g));
        std::vector<double> gens;
        for (const auto& r : g.runs) gens.push_back(*r.generations_to(r.best_fitness()));
        const auto gs = summarize(gens);
        t1.rows.push_back({g.task, g.setup, std::to_string(g.runs.size()) + (g.failures.empty() ? "" : " (+" + std::to_string(g.failures.size()) + " failed)"),
                           bold(mean_sd(f), highest_mean(d, g, fitnesses)), bold(mean_sd(a), highest_mean(d, g, test_accuracies)),
                           gs.n ? fmt(gs.mean, 1) : "n/a"});
    }
    out << t1.render() << '\n';

    out << "Best run per setup\n";
    Table t3{{{"task", "setup", "run", "evo fitness", "final-test accuracy"}}};
    for (const auto& g : d.groups) {
        if (g.runs.empty()) continue;
        const RunLog* best = &g.runs.front();
        for (const auto& r : g.runs)
            if (r.best_fitness() > best->best_fitness()) best = &r;
        t3.rows.push_back({g.task, g.setup, std::to_string(best->run), fmt(best->best_fitness()),
                           best->final_test_accuracy() >= 0 ? fmt(best->final_test_accuracy()) : "n/a"});
    }
    out << t3.render() << '\n';

    const auto cmp = comparisons(d);
    if (!cmp.empty()) {
        out << "Mann-Whitney U on evolutionary fitness (two-sided, alpha = 0.05)\n";
        Table tm{{{"task", "a", "b", "n1", "n2", "U", "p", "r", "method"}}};
        for (const auto& c : cmp)
            tm.rows.push_back({c.task, c.a, c.b, std::to_string(c.stats.n1), std::to_string(c.stats.n2), fmt(c.stats.u, 1),
                               fmt(c.stats.p), fmt(c.stats.r, 3), c.stats.exact ? "exact" : "normal"});
        out << tm.render() << '\n';
    }

    if (!d.cross.empty()) {
        out << "Generalisation matrix (champion retrained on target; final-test accuracy mean +- sd)\n";
        std::vector<std::string> champs, targets;
        for (const auto& e : d.cross) {
            if (std::find(champs.begin(), champs.end(), e.champion_task) == champs.end()) champs.push_back(e.champion_task);
            if (std::find(targets.begin(), targets.end(), e.target_task) == targets.end()) targets.push_back(e.target_task);
        }
        Table tc{{{"champion \\ target"}}};
        for (const auto& t : targets) tc.rows[0].push_back(t);
        std::vector<std::string> notes;
        for (const auto& c : champs) {
            std::vector<std::string> row{c};
            for (const auto& t : targets) {
                auto it = std::find_if(d.cross.begin(), d.cross.end(),
                                       [&](const CrossEvalEntry& e) { return e.champion_task == c && e.target_task == t; });
                if (it == d.cross.end()) {
                    row.push_back("-");
                } else if (!it->compatible) {
                    row.push_back("incompatible");
                    notes.push_back(c + " -> " + t + ": " + it->reason);
                } else {
                    row.push_back(mean_sd(summarize(it->accuracies)));
                }
            }
            tc.rows.push_back(std::move(row));
        }
        out << tc.render();
        for (const auto& n : notes) out << "  note: " << n << '\n';
        out << '\n';
    }

    out << "Topology snapshots of the median run (lower median by best fitness)\n";
    for (const auto& g : d.groups) {
        if (g.runs.empty()) continue;
        const auto& m = median_run(g);
        out << "  " << g.task << " / " << g.setup << " / run " << m.run << '\n';
        for (int gen : snapshot_generations(m.history.back().generation)) {
            auto it = std::find_if(m.history.begin(), m.history.end(), [&](const GenerationRecord& r) { return r.generation == gen; });
            if (it == m.history.end()) continue;
            out << "   generation " << gen << " (fitness " << fmt(it->best_fitness) << ")\n" << tagged_listing(*it);
        }
    }

    bool any_failure = !d.problems.empty();
    for (const auto& g : d.groups) any_failure = any_failure || !g.failures.empty();
    if (any_failure) {
        out << "\nFailures\n";
        for (const auto& g : d.groups)
            for (const auto& f : g.failures) out << "  " << g.task << " / " << g.setup << " / " << f << '\n';
        for (const auto& p : d.problems) out << "  " << p << '\n';
    }
    return out.str();
}

std::string report_csv(const ReportData& d) {
    std::ostringstream out;
    out << "table,task,setup,key,value\n";
    auto row = [&](const std::string& table, const std::string& task, const std::string& setup, const std::string& key,
                   const std::string& value) {
        out << csv_field(table) << ',' << csv_field(task) << ',' << csv_field(setup) << ',' << csv_field(key) << ','
            << csv_field(value) << '\n';
    };
    for (const auto& g : d.groups) {
        const auto f = summarize(fitnesses(g));
        const auto a = summarize(test_accuracies(g));
        row("summary", g.task, g.setup, "runs", std::to_string(f.n));
        row("summary", g.task, g.setup, "failed_runs", std::to_string(g.failures.size()));
        row("summary", g.task, g.setup, "fitness_mean", fmt(f.mean, 6));
        row("summary", g.task, g.setup, "fitness_sd", fmt(f.sd, 6));
        row("summary", g.task, g.setup, "fitness_highest_mean", highest_mean(d, g, fitnesses) ? "1" : "0");
        if (a.n) {
            row("summary", g.task, g.setup, "test_accuracy_mean", fmt(a.mean, 6));
            row("summary", g.task, g.setup, "test_accuracy_sd", fmt(a.sd, 6));
        }
        for (const auto& r : g.runs) {
            const auto key = "run_" + std::to_string(r.run);
            row("runs", g.task, g.setup, key + "_fitness", fmt(r.best_fitness(), 6));
            if (r.final_test_accuracy() >= 0) row("runs", g.task, g.setup, key + "_test_accuracy", fmt(r.final_test_accuracy(), 6));
        }
    }
    for (const auto& c : comparisons(d)) {
        const auto setup = c.a + " vs " + c.b;
        row("mann_whitney", c.task, setup, "U", fmt(c.stats.u, 1));
        row("mann_whitney", c.task, setup, "p", fmt(c.stats.p, 6));
        row("mann_whitney", c.task, setup, "r", fmt(c.stats.r, 6));
    }
    for (const auto& e : d.cross) {
        const auto key = e.champion_task + " -> " + e.target_task;
        if (!e.compatible) {
            row("crosseval", e.target_task, e.champion_task, "incompatible", e.reason);
            continue;
        }
        const auto s = summarize(e.accuracies);
        row("crosseval", e.target_task, e.champion_task, "accuracy_mean", fmt(s.mean, 6));
        row("crosseval", e.target_task, e.champion_task, "accuracy_sd", fmt(s.sd, 6));
    }
    return out.str();
}

}  // namespace gramevo
