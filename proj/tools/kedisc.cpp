// kedisc: command line front end for dataset generation, guesses and experiments.

#include "kedisc/datasets.hpp"
#include "kedisc/errors.hpp"
#include "kedisc/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace kedisc;

namespace {

struct Common {
    std::string equation = "viscous-burgers";
    std::string config;
    std::string data;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
};

void add_common(CLI::App* app, Common& c, bool with_data)
{
    app->add_option("--equation", c.equation, "Equation preset (viscous-burgers, inviscid-burgers, wave, kdv)");
    app->add_option("--config", c.config, "key = value settings file");
    if (with_data) app->add_option("--data", c.data, "Dataset directory (field.csv, field.json, truth.json)");
    app->add_option("--seed", c.seed, "Master seed");
    app->add_option("--workers", c.workers, "Worker threads");
}

ExperimentConfig load_config(const Common& c)
{
    auto cfg = preset_config(c.equation);
    if (!c.config.empty() && std::filesystem::exists(c.config)) apply_settings(cfg, read_key_values(c.config));
    if (c.seed) cfg.master_seed = *c.seed;
    if (c.workers) cfg.workers = *c.workers;
    return cfg;
}

Dataset load_data(const Common& c)
{
    if (c.data.empty()) return generate(c.equation);
    namespace fs = std::filesystem;
    const fs::path d(c.data);
    Dataset ds;
    ds.field = load_csv((d / "field.csv").string(), (d / "field.json").string());
    if (fs::exists(d / "truth.json")) ds.truth = load_truth((d / "truth.json").string());
    return ds;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void print_guess(const GuessResult& g)
{
    std::cout << "balance term: " << g.lhs.key() << "  lambda: " << g.lambda << "  loss: " << g.loss.total << '\n';
    auto e = g.guess.entries;
    std::stable_sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
    for (std::size_t i = 0; i < std::min<std::size_t>(e.size(), 10); ++i)
        std::cout << "  " << e[i].second << "  " << e[i].first.key() << '\n';
    if (e.size() > 10) std::cout << "  ... " << e.size() - 10 << " more\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Knowledge-guided evolutionary discovery of differential equations"};
    app.require_subcommand(1);

    // dataset gen
    auto* dataset = app.add_subcommand("dataset", "Built-in datasets");
    dataset->require_subcommand(1);
    auto* gen = dataset->add_subcommand("gen", "Generate a built-in dataset");
    std::string gen_eq = "viscous-burgers", gen_out;
    gen->add_option("--equation", gen_eq, "Equation id")->check(CLI::IsMember(builtin_equations()));
    gen->add_option("--out", gen_out, "Output directory")->required();

    // guess
    Common guess_c;
    auto* guess = app.add_subcommand("guess", "Train SymNet and write an initial guess");
    add_common(guess, guess_c, true);
    std::string guess_out = "guess.json";
    double guess_noise = 0.0;
    guess->add_option("--out", guess_out, "Guess JSON path");
    guess->add_option("--noise-magnitude", guess_noise, "Relative noise magnitude applied before training");

    // discover
    Common disc_c;
    auto* disc = app.add_subcommand("discover", "Run one evolutionary search");
    add_common(disc, disc_c, true);
    std::string disc_mode = "classical", disc_mf = "2.4", disc_guess, disc_out;
    double disc_noise = 0.0;
    disc->add_option("--mode", disc_mode, "classical or modified");
    disc->add_option("--mf", disc_mf, "Mixing factor or 'auto'");
    disc->add_option("--guess", disc_guess, "Initial guess JSON (modified mode; generated when absent)");
    disc->add_option("--noise-magnitude", disc_noise, "Relative noise magnitude");
    disc->add_option("--out", disc_out, "Result JSON path");

    // tune-mf
    Common tune_c;
    auto* tune = app.add_subcommand("tune-mf", "Pick the mixing factor for a guess");
    add_common(tune, tune_c, false);
    std::string tune_guess;
    std::optional<std::size_t> tune_k;
    std::optional<double> tune_ratio;
    bool tune_curve = false;
    tune->add_option("--guess", tune_guess, "Initial guess JSON")->required();
    tune->add_option("--k", tune_k, "Expected number of terms (default: max terms per equation)");
    tune->add_option("--ideal-ratio", tune_ratio, "Weight of favoured terms in the ideal distribution");
    tune->add_flag("--curve", tune_curve, "Print KL divergence over the grid");

    // experiment
    Common exp_c;
    auto* exp = app.add_subcommand("experiment", "Multi-run noise sweep");
    add_common(exp, exp_c, true);
    std::optional<std::size_t> exp_runs;
    std::string exp_noise, exp_mf, exp_mode, exp_out = "results";
    std::optional<double> exp_limit;
    exp->add_option("--runs", exp_runs, "Runs per cell");
    exp->add_option("--noise", exp_noise, "Noise levels in percent of the limit, e.g. 0,25,50,75,100");
    exp->add_option("--mf", exp_mf, "Mixing factors, e.g. 2.4,auto");
    exp->add_option("--mode", exp_mode, "classical, modified or both (comma separated)");
    exp->add_option("--limit", exp_limit, "Limit noise magnitude");
    exp->add_option("--out", exp_out, "Output directory");

    // calibrate
    Common cal_c;
    auto* cal = app.add_subcommand("calibrate", "Find the limit noise magnitude of the classical mode");
    add_common(cal, cal_c, true);
    std::optional<std::size_t> cal_runs;
    cal->add_option("--runs", cal_runs, "Classical runs per magnitude");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            save_dataset(generate(gen_eq), gen_out);
            std::cout << "wrote " << gen_eq << " to " << gen_out << '\n';
        } else if (guess->parsed()) {
            auto cfg = load_config(guess_c);
            cfg.symnet.seed = cfg.master_seed;
            const auto ds = load_data(guess_c);
            const auto eval = make_evaluator(prepare_field(ds.field, guess_noise, cfg.master_seed, cfg), cfg);
            const auto g = make_guess(eval, cfg);
            print_guess(g);
            save_guess(g.guess, guess_out);
            std::cout << "wrote " << guess_out << '\n';
        } else if (disc->parsed()) {
            auto cfg = load_config(disc_c);
            cfg.symnet.seed = cfg.master_seed;
            const auto ds = load_data(disc_c);
            const auto eval = make_evaluator(prepare_field(ds.field, disc_noise, cfg.master_seed, cfg), cfg);
            const auto space = build_space(cfg);
            Mode mode = parse_mode(disc_mode);
            const MfSetting mfs = parse_mf(disc_mf);
            std::optional<InitialGuess> g;
            if (mode == Mode::Modified) {
                try {
                    if (!disc_guess.empty())
                        g = load_guess(disc_guess, ds.field.grid().ndim());
                    else
                        g = make_guess(eval, cfg).guess;
                } catch (const GuessError& e) {
                    std::cerr << "warning: " << e.what() << "; falling back to classical mode\n";
                    mode = Mode::Classical;
                }
            }
            double mf = mfs.value;
            if (g && mfs.autotune) mf = tune_mixing_factor(*g, space, cfg.evo.n_terms_max, cfg.tune).mf;
            auto o = run_once(eval, space, ds.truth, cfg, mode, mf, g ? &*g : nullptr, cfg.master_seed);
            if (!o.error.empty()) throw Error(o.error);
            if (o.population.empty()) throw Error("empty population");
            std::cout << "best: " << format_equation(o.population.front()) << '\n';
            if (!ds.truth.terms.empty())
                std::cout << "success: " << (o.record.success ? "yes" : "no")
                          << (o.record.mae ? "  mae: " + std::to_string(*o.record.mae) : "") << '\n';
            if (!disc_out.empty()) {
                std::ofstream out(disc_out);
                out << result_json(o) << '\n';
            }
        } else if (tune->parsed()) {
            auto cfg = load_config(tune_c);
            if (tune_ratio) cfg.tune.ideal_ratio = *tune_ratio;
            const auto g = load_guess(tune_guess, cfg.pool.max_orders.size());
            const auto r = tune_mixing_factor(g, build_space(cfg), tune_k.value_or(cfg.evo.n_terms_max), cfg.tune);
            std::cout << "mf = " << r.mf << '\n';
            if (tune_curve)
                for (const auto& [mf, kl] : r.curve) std::cout << mf << ' ' << kl << '\n';
        } else if (exp->parsed()) {
            auto cfg = load_config(exp_c);
            cfg.symnet.seed = cfg.master_seed;
            if (exp_runs) cfg.runs = *exp_runs;
            if (exp_limit) cfg.limit_magnitude = *exp_limit;
            if (!exp_noise.empty()) {
                cfg.noise_pcts.clear();
                for (const auto& p : split_list(exp_noise)) cfg.noise_pcts.push_back(std::stoi(p));
            }
            if (!exp_mf.empty()) {
                cfg.mfs.clear();
                for (const auto& p : split_list(exp_mf)) cfg.mfs.push_back(parse_mf(p));
            }
            if (!exp_mode.empty()) {
                cfg.modes.clear();
                for (const auto& p : split_list(exp_mode)) cfg.modes.push_back(parse_mode(p));
            }
            const auto ds = load_data(exp_c);
            const auto r = run_experiment(ds, cfg);
            write_experiment(r, exp_out);
            std::cout << summary_csv(r.records);
        } else if (cal->parsed()) {
            auto cfg = load_config(cal_c);
            if (cal_runs) cfg.calibration_runs = *cal_runs;
            const auto ds = load_data(cal_c);
            const auto r = calibrate_limit_magnitude(ds, cfg);
            for (const auto& [m, s] : r.trace) std::cout << "magnitude " << m << ": " << s << " successes\n";
            std::cout << "limit magnitude = " << r.limit << '\n';
            if (!cal_c.config.empty()) {
                std::ostringstream v;
                v.precision(17);
                v << r.limit;
                write_key_value(cal_c.config, cfg.equation + ".limit_magnitude", v.str());
                std::cout << "stored in " << cal_c.config << '\n';
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
