#include "kedisc/harness.hpp"

#include "kedisc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <mutex>
#include <thread>
#include <tuple>

namespace kedisc {

using nlohmann::json;

namespace {

std::set<std::string> key_set(const std::vector<Term>& terms)
{
    std::set<std::string> s;
    for (const auto& t : terms) s.insert(t.key());
    return s;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::size_t symmetric_difference(const std::set<std::string>& a, const std::set<std::string>& b)
{
    std::size_t d = 0;
    for (const auto& k : a) d += !b.count(k);
    for (const auto& k : b) d += !a.count(k);
    return d;
}

} // namespace

std::optional<double> coefficient_mae(const Chromosome& found, const GroundTruth& truth)
{
    if (!found.target || found.coefficients.size() != found.terms.size()) return std::nullopt;
    if (key_set(found.structure()) != key_set(truth.all_terms())) return std::nullopt;
    auto coef = [&](const Term& t) {
        for (std::size_t i = 0; i < found.terms.size(); ++i)
            if (found.terms[i] == t) return found.coefficients[i];
        return 0.0;
    };
    const double lhs = coef(truth.lhs);
    if (lhs == 0.0 || !std::isfinite(lhs)) return std::nullopt;
    const double scale = -1.0 / lhs;
    if (truth.terms.empty()) return 0.0;
    double s = 0.0;
    for (const auto& [t, c] : truth.terms) s += std::abs(scale * coef(t) - c);
    return s / static_cast<double>(truth.terms.size());
}

std::size_t shd(const Chromosome& found, const GroundTruth& truth, double threshold)
{
    std::set<std::string> present;
    for (std::size_t i = 0; i < found.terms.size(); ++i) {
        const bool is_target = found.target && *found.target == i;
        const double c = i < found.coefficients.size() ? found.coefficients[i] : 0.0;
        if (is_target || std::abs(c) >= threshold) present.insert(found.terms[i].key());
    }
    return symmetric_difference(present, key_set(truth.all_terms()));
}

std::size_t shd(const InitialGuess& found, const GroundTruth& truth, double threshold)
{
    std::set<std::string> present;
    for (const auto& [t, c] : found.entries)
        if (std::abs(c) >= threshold) present.insert(t.key());
    return symmetric_difference(present, key_set(truth.all_terms()));
}

double guess_mae(const InitialGuess& guess, const GroundTruth& truth)
{
    const double lhs = guess.coefficient(truth.lhs).value_or(0.0);
    if (lhs == 0.0) throw GuessError("guess has no weight on the balance term " + truth.lhs.key());
    const double scale = -1.0 / lhs;
    if (truth.terms.empty()) return 0.0;
    double s = 0.0;
    for (const auto& [t, c] : truth.terms) s += std::abs(scale * guess.coefficient(t).value_or(0.0) - c);
    return s / static_cast<double>(truth.terms.size());
}

std::string format_equation(const Chromosome& c)
{
    std::string out;
    for (std::size_t i = 0; i < c.terms.size(); ++i) {
        const bool is_target = c.target && *c.target == i;
        if (!is_target && !(i < c.kept.size() && c.kept[i])) continue;
        if (!out.empty()) out += " + ";
        const double v = i < c.coefficients.size() ? c.coefficients[i] : 0.0;
        out += short_num(v) + " " + c.terms[i].param_key();
    }
    return out.empty() ? "0" : out + " = 0";
}

std::string to_string(const MfSetting& m) { return m.autotune ? "auto" : short_num(m.value); }

MfSetting parse_mf(const std::string& s)
{
    if (s == "auto") return {true, kDefaultMixingFactor};
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        if (!(v >= 1.0 && v <= 5.0)) throw ConfigError("mixing factor must lie in [1.0, 5.0]");
        return {false, v};
    } catch (const std::logic_error&) {
        throw ConfigError("mixing factor '" + s + "' is neither a number nor 'auto'");
    }
}

void ExperimentConfig::validate() const
{
    if (runs < 1) throw ConfigError("runs must be at least 1");
    if (!(limit_magnitude > 0.0)) throw ConfigError("limit magnitude must be positive");
    if (modes.empty()) throw ConfigError("no modes selected");
    if (mfs.empty()) throw ConfigError("no mixing factors selected");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    for (int p : noise_pcts)
        if (p != 0 && p != 25 && p != 50 && p != 75 && p != 100)
            throw ConfigError("noise levels must be among 0, 25, 50, 75, 100");
    if (smooth_window != 0 && (smooth_window < 3 || smooth_window % 2 == 0))
        throw ConfigError("smoothing window must be odd and at least 3");
    evo.validate();
}

ExperimentConfig preset_config(const std::string& equation)
{
    ExperimentConfig c;
    c.equation = equation;
    auto set = [&](std::size_t pop, std::size_t epochs, std::size_t nterms, std::size_t tmax, std::vector<int> orders) {
        c.evo.population_size = pop;
        c.evo.epochs = epochs;
        c.evo.n_terms_max = nterms;
        c.evo.t_max = tmax;
        c.pool.max_orders = std::move(orders);
    };
    if (equation == "viscous-burgers")
        set(8, 7, 3, 2, {1, 2});
    else if (equation == "inviscid-burgers")
        set(5, 5, 3, 2, {1, 1});
    else if (equation == "wave")
        set(5, 5, 3, 1, {2, 2});
    else if (equation == "kdv")
        set(8, 90, 4, 2, {1, 3});
    else
        throw ConfigError("no preset for equation '" + equation + "'");
    return c;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos == v.size()) return d;
    } catch (const std::logic_error&) {
    }
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

std::size_t to_count(const std::string& key, const std::string& v)
{
    const double d = to_double(key, v);
    if (d < 0 || d != std::floor(d)) throw ConfigError("'" + key + "' expects a non-negative integer");
    return static_cast<std::size_t>(d);
}

std::uint64_t to_seed(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const auto s = std::stoull(v, &pos);
        if (pos == v.size() && v.find('-') == std::string::npos) return s;
    } catch (const std::logic_error&) {
    }
    throw ConfigError("'" + key + "' expects an unsigned integer, got '" + v + "'");
}

void apply_one(ExperimentConfig& c, const std::string& key, const std::string& v)
{
    auto& e = c.evo;
    if (key == "runs") c.runs = to_count(key, v);
    else if (key == "population_size") e.population_size = to_count(key, v);
    else if (key == "epochs") e.epochs = to_count(key, v);
    else if (key == "n_terms_max") e.n_terms_max = to_count(key, v);
    else if (key == "t_max") e.t_max = to_count(key, v);
    else if (key == "crossover_rate") e.crossover_rate = to_double(key, v);
    else if (key == "mutation_term_rate") e.mutation_term_rate = to_double(key, v);
    else if (key == "mutation_token_rate") e.mutation_token_rate = to_double(key, v);
    else if (key == "offspring_factor") e.offspring_factor = to_count(key, v);
    else if (key == "full_initial_size") e.full_initial_size = to_count(key, v) != 0;
    else if (key == "lambda") e.fit.lambda = to_double(key, v);
    else if (key == "prune_threshold") e.fit.prune_threshold = to_double(key, v);
    else if (key == "max_orders") {
        c.pool.max_orders.clear();
        for (const auto& p : split(v, ',')) c.pool.max_orders.push_back(static_cast<int>(to_count(key, p)));
    } else if (key == "trig") c.pool.trig = to_count(key, v) != 0;
    else if (key == "limit_magnitude") c.limit_magnitude = to_double(key, v);
    else if (key == "master_seed" || key == "seed") c.master_seed = to_seed(key, v);
    else if (key == "workers") c.workers = to_count(key, v);
    else if (key == "mf") {
        c.mfs.clear();
        for (const auto& p : split(v, ',')) c.mfs.push_back(parse_mf(p));
    } else if (key == "noise") {
        c.noise_pcts.clear();
        for (const auto& p : split(v, ',')) c.noise_pcts.push_back(static_cast<int>(to_count(key, p)));
    } else if (key == "modes") {
        c.modes.clear();
        for (const auto& p : split(v, ',')) c.modes.push_back(parse_mode(p));
    } else if (key == "ideal_ratio") c.tune.ideal_ratio = to_double(key, v);
    else if (key == "symnet_iters") c.symnet.max_iters = static_cast<int>(to_count(key, v));
    else if (key == "symnet_layers") c.symnet.hidden_layers = to_count(key, v);
    else if (key == "symnet_learning_rate") c.symnet.learning_rate = to_double(key, v);
    else if (key == "smooth_window") c.smooth_window = static_cast<int>(to_count(key, v));
    else if (key == "smooth_degree") c.smooth_degree = static_cast<int>(to_count(key, v));
    else if (key == "smooth_clean") c.smooth_clean = to_count(key, v) != 0;
    else if (key == "calibration_runs") c.calibration_runs = to_count(key, v);
    else throw ConfigError("unknown setting '" + key + "'");
}

} // namespace

std::map<std::string, std::string> read_key_values(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot read " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IngestionError(path + ":" + std::to_string(n) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw IngestionError(path + ":" + std::to_string(n) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv)
{
    const std::string prefix = cfg.equation + ".";
    // Plain keys first so equation-specific ones win.
    for (const auto& [k, v] : kv)
        if (k.find('.') == std::string::npos) apply_one(cfg, k, v);
    for (const auto& [k, v] : kv)
        if (k.rfind(prefix, 0) == 0) apply_one(cfg, k.substr(prefix.size()), v);
}

void write_key_value(const std::string& path, const std::string& key, const std::string& value)
{
    std::vector<std::string> lines;
    {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
    }
    bool replaced = false;
    for (auto& line : lines) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.find('#') < eq) continue;
        if (trim(line.substr(0, eq)) == key) {
            line = key + " = " + value;
            replaced = true;
        }
    }
    if (!replaced) lines.push_back(key + " = " + value);
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path);
    for (const auto& l : lines) out << l << '\n';
}

TermSpace build_space(const ExperimentConfig& cfg)
{
    return enumerate_term_space(build_token_pool(cfg.pool), cfg.evo.t_max);
}

Field prepare_field(const Field& clean, double magnitude, std::uint64_t seed, const ExperimentConfig& cfg)
{
    Field f = magnitude > 0.0 ? add_noise(clean, magnitude, seed) : clean;
    if (cfg.smooth_window > 0 && (magnitude > 0.0 || cfg.smooth_clean)) f = smooth(f, cfg.smooth_window, cfg.smooth_degree);
    return f;
}

TermEvaluator make_evaluator(const Field& f, const ExperimentConfig& cfg)
{
    return TermEvaluator(f, interior_margins(cfg.pool.max_orders));
}

GuessResult make_guess(const TermEvaluator& eval, const ExperimentConfig& cfg)
{
    return generate_initial_guess(eval, build_token_pool(cfg.pool), cfg.symnet);
}

RunRecord assess(const std::vector<Chromosome>& population, const GroundTruth& truth)
{
    RunRecord r;
    if (population.empty()) {
        r.shd = truth.all_terms().size();
        return r;
    }
    const Chromosome& best = population.front();
    r.success = coefficient_mae(best, truth).has_value();
    if (r.success)
        for (const auto& c : population)
            if (auto m = coefficient_mae(c, truth); m && (!r.mae || *m < *r.mae)) r.mae = m;
    r.shd = shd(best, truth);
    r.best_equation = format_equation(best);
    return r;
}

RunOutcome run_once(const TermEvaluator& eval, const TermSpace& space, const GroundTruth& truth,
                    const ExperimentConfig& cfg, Mode mode, double mf, const InitialGuess* guess, std::uint64_t seed)
{
    RunOutcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        EvolutionConfig ec = cfg.evo;
        ec.mode = mode;
        ec.mf = mf;
        ec.seed = seed;
        o.population = evolve(eval, space, ec, mode == Mode::Modified ? guess : nullptr);
        o.record = assess(o.population, truth);
    } catch (const Error& e) {
        o.error = e.what();
        o.record = RunRecord{};
        o.record.shd = truth.all_terms().size();
    }
    o.record.seed = seed;
    o.record.mode = mode;
    if (mode == Mode::Modified) o.record.mf = mf;
    o.record.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return o;
}

std::uint64_t run_seed(std::uint64_t master, int pct, std::size_t run)
{
    return derive_seed(master, static_cast<std::uint64_t>(pct), run);
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

// Noise realization for run r at level pct; the evolution seed is the run seed.
std::uint64_t noise_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 0x6e6f697365ULL); }

struct Job {
    int pct;
    std::size_t run;
    Mode mode;
    double mf;
    const InitialGuess* guess;
};

} // namespace

ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& cfg)
{
    cfg.validate();
    const TermSpace space = build_space(cfg);
    ExperimentResult res;

    const bool any_modified = std::find(cfg.modes.begin(), cfg.modes.end(), Mode::Modified) != cfg.modes.end();
    if (any_modified)
        for (int pct : cfg.noise_pcts) {
            const double mag = cfg.limit_magnitude * pct / 100.0;
            const auto t0 = std::chrono::steady_clock::now();
            const Field f = prepare_field(data.field, mag, derive_seed(cfg.master_seed, pct, 0x6775657373ULL), cfg);
            const TermEvaluator eval = make_evaluator(f, cfg);
            try {
                auto g = make_guess(eval, cfg);
                res.tuned_mf[pct] = tune_mixing_factor(g.guess, space, cfg.evo.n_terms_max, cfg.tune).mf;
                res.guesses.emplace(pct, std::move(g));
            } catch (const Error&) {
                // Modified runs at this level fall back to classical operators.
            }
            res.guess_seconds[pct] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }

    std::vector<Job> jobs;
    for (int pct : cfg.noise_pcts)
        for (Mode mode : cfg.modes) {
            if (mode == Mode::Classical) {
                for (std::size_t r = 0; r < cfg.runs; ++r) jobs.push_back({pct, r, mode, kDefaultMixingFactor, nullptr});
                continue;
            }
            const auto g = res.guesses.find(pct);
            for (const auto& m : cfg.mfs) {
                const double mf = m.autotune ? (res.tuned_mf.count(pct) ? res.tuned_mf[pct] : kDefaultMixingFactor)
                                             : m.value;
                for (std::size_t r = 0; r < cfg.runs; ++r)
                    jobs.push_back({pct, r, mode, mf, g == res.guesses.end() ? nullptr : &g->second.guess});
            }
        }

    res.outcomes.resize(jobs.size());
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
        const Job& j = jobs[i];
        const std::uint64_t seed = run_seed(cfg.master_seed, j.pct, j.run);
        const Field f = prepare_field(data.field, cfg.limit_magnitude * j.pct / 100.0, noise_seed(seed), cfg);
        const TermEvaluator eval = make_evaluator(f, cfg);
        RunOutcome o;
        if (j.mode == Mode::Modified && !j.guess) {
            o.error = "no initial guess at this noise level";
            o.record.seed = seed;
            o.record.mode = j.mode;
            o.record.mf = j.mf;
            o.record.shd = data.truth.all_terms().size();
        } else {
            o = run_once(eval, space, data.truth, cfg, j.mode, j.mf, j.guess, seed);
        }
        o.record.noise_level_pct = j.pct;
        res.outcomes[i] = std::move(o);
    });
    for (const auto& o : res.outcomes) res.records.push_back(o.record);
    return res;
}

std::size_t classical_successes(const Dataset& data, const ExperimentConfig& cfg, double magnitude)
{
    const TermSpace space = build_space(cfg);
    const std::size_t runs = cfg.calibration_runs ? cfg.calibration_runs : cfg.runs;
    std::vector<char> ok(runs, 0);
    parallel_for(runs, cfg.workers, [&](std::size_t r) {
        const std::uint64_t seed = run_seed(cfg.master_seed, 100, r);
        const Field f = prepare_field(data.field, magnitude, noise_seed(seed), cfg);
        const TermEvaluator eval = make_evaluator(f, cfg);
        ok[r] = run_once(eval, space, data.truth, cfg, Mode::Classical, kDefaultMixingFactor, nullptr, seed)
                    .record.success;
    });
    return static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
}

CalibrationResult calibrate_limit_magnitude(const Dataset& data, const ExperimentConfig& cfg)
{
    cfg.validate();
    constexpr double kLow = 1e-6;
    constexpr double kHigh = 10.0;
    CalibrationResult res;
    auto successes = [&](double m) {
        const std::size_t s = classical_successes(data, cfg, m);
        res.trace.emplace_back(m, s);
        return s;
    };

    double m = std::clamp(cfg.limit_magnitude, kLow, kHigh);
    double lo = 0.0, hi = 0.0;
    if (successes(m) == 0) {
        hi = m;
        while (true) {
            if (hi / 2.0 < kLow) throw CalibrationError("classical mode fails even at the smallest magnitude");
            if (successes(hi / 2.0) > 0) {
                lo = hi / 2.0;
                break;
            }
            hi /= 2.0;
        }
    } else {
        lo = m;
        while (true) {
            if (lo * 2.0 > kHigh) throw CalibrationError("classical mode still succeeds at the largest magnitude");
            if (successes(lo * 2.0) == 0) {
                hi = lo * 2.0;
                break;
            }
            lo *= 2.0;
        }
    }
    for (int step = 0; step < 10; ++step) {
        const double mid = std::sqrt(lo * hi);
        if (successes(mid) == 0)
            hi = mid;
        else
            lo = mid;
    }
    res.limit = hi;
    return res;
}

std::string records_csv(const std::vector<RunRecord>& records)
{
    std::ostringstream out;
    out << "seed,mode,mf,noise_level_pct,success,mae,shd,best_equation\n";
    for (const auto& r : records) {
        out << r.seed << ',' << to_string(r.mode) << ',' << (r.mf ? num(*r.mf) : "") << ',' << r.noise_level_pct << ','
            << (r.success ? 1 : 0) << ',' << (r.mae ? num(*r.mae) : "") << ',' << r.shd << ",\"" << r.best_equation
            << "\"\n";
    }
    return out.str();
}

std::string summary_csv(const std::vector<RunRecord>& records)
{
    struct Cell {
        std::size_t runs = 0, successes = 0;
        double mae_sum = 0.0;
    };
    using Key = std::tuple<std::string, std::string, int>;
    std::map<Key, Cell> cells;
    for (const auto& r : records) {
        auto& c = cells[{to_string(r.mode), r.mf ? short_num(*r.mf) : "", r.noise_level_pct}];
        ++c.runs;
        if (r.success) {
            ++c.successes;
            c.mae_sum += *r.mae;
        }
    }
    std::ostringstream out;
    out << "mode,mf,noise_level_pct,runs,successes,success_rate,mean_mae\n";
    for (const auto& [k, c] : cells) {
        const auto& [mode, mf, pct] = k;
        out << mode << ',' << mf << ',' << pct << ',' << c.runs << ',' << c.successes << ','
            << num(static_cast<double>(c.successes) / static_cast<double>(c.runs)) << ','
            << (c.successes ? num(c.mae_sum / static_cast<double>(c.successes)) : "") << '\n';
    }
    // Modified minus classical success rate per (mf, noise level).
    for (const auto& [k, c] : cells) {
        const auto& [mode, mf, pct] = k;
        if (mode != "modified") continue;
        const auto base = cells.find({"classical", "", pct});
        if (base == cells.end()) continue;
        const double d = static_cast<double>(c.successes) / static_cast<double>(c.runs) -
                         static_cast<double>(base->second.successes) / static_cast<double>(base->second.runs);
        out << "delta," << mf << ',' << pct << ",,,"  << num(d) << ",\n";
    }
    return out.str();
}

std::string result_json(const RunOutcome& o)
{
    json pop = json::array();
    for (const auto& c : o.population) {
        json terms = json::array();
        for (std::size_t i = 0; i < c.terms.size(); ++i)
            terms.push_back({{"term", c.terms[i].param_key()},
                             {"coefficient", i < c.coefficients.size() ? c.coefficients[i] : 0.0},
                             {"kept", i < c.kept.size() && c.kept[i]},
                             {"target", c.target && *c.target == i}});
        pop.push_back({{"fitness", c.fitness.value_or(0.0)}, {"terms", terms}});
    }
    const auto& r = o.record;
    json j = {{"seed", r.seed},
              {"mode", to_string(r.mode)},
              {"noise_level_pct", r.noise_level_pct},
              {"success", r.success},
              {"shd", r.shd},
              {"runtime_s", r.runtime_s},
              {"best_equation", r.best_equation},
              {"population", pop}};
    j["mf"] = r.mf ? json(*r.mf) : json(nullptr);
    j["mae"] = r.mae ? json(*r.mae) : json(nullptr);
    if (!o.error.empty()) j["error"] = o.error;
    return j.dump(2);
}

void write_experiment(const ExperimentResult& r, const std::string& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw IngestionError("cannot write " + (fs::path(dir) / name).string());
        out << text;
    };
    write("records.csv", records_csv(r.records));
    write("summary.csv", summary_csv(r.records));

    std::ostringstream t;
    t << "kind,mode,mf,noise_level_pct,seed,seconds\n";
    for (const auto& [pct, s] : r.guess_seconds) t << "guess,,," << pct << ",," << s << '\n';
    for (const auto& rec : r.records)
        t << "run," << to_string(rec.mode) << ',' << (rec.mf ? short_num(*rec.mf) : "") << ',' << rec.noise_level_pct
          << ',' << rec.seed << ',' << rec.runtime_s << '\n';
    write("timings.csv", t.str());

    for (const auto& [pct, g] : r.guesses) write("guess-" + std::to_string(pct) + ".json", guess_to_json(g.guess));
    for (const auto& o : r.outcomes) {
        const auto& rec = o.record;
        std::string name = "result-" + std::to_string(rec.seed) + "-" + to_string(rec.mode);
        if (rec.mf) name += "-mf" + short_num(*rec.mf);
        write(name + ".json", result_json(o));
    }
}

} // namespace kedisc
