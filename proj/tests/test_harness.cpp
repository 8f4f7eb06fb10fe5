#include "kedisc/errors.hpp"
#include "kedisc/harness.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kedisc;

namespace {

GroundTruth burgers_truth()
{
    return GroundTruth{{{Term::from_labels({"u", "du/dx"}), -1.0}, {Term::from_labels({"d^2u/dx^2"}), 0.1}},
                       Term::from_labels({"du/dt"})};
}

Chromosome found(std::vector<std::pair<std::vector<std::string>, double>> entries)
{
    Chromosome c;
    for (const auto& [labels, v] : entries) {
        c.terms.push_back(Term::from_labels(labels));
        c.coefficients.push_back(v);
        c.kept.push_back(true);
    }
    c.target = 0;
    return c;
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("kedisc-test-" + name)).string();
}

ExperimentConfig quick_config()
{
    auto cfg = preset_config("viscous-burgers");
    cfg.runs = 3;
    cfg.noise_pcts = {0, 25};
    cfg.modes = {Mode::Classical};
    cfg.evo.epochs = 2;
    cfg.limit_magnitude = 1e-3;
    cfg.master_seed = 42;
    return cfg;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("coefficient MAE")
{
    const auto truth = burgers_truth();
    auto exact = found({{{"du/dt"}, -1.0}, {{"u", "du/dx"}, -1.0}, {{"d^2u/dx^2"}, 0.1}});
    CHECK(coefficient_mae(exact, truth) == 0.0);

    auto near = found({{{"du/dt"}, -1.0}, {{"u", "du/dx"}, -0.9}, {{"d^2u/dx^2"}, 0.12}});
    CHECK(*coefficient_mae(near, truth) == doctest::Approx(0.06).epsilon(1e-12));

    // Scaled so the lhs carries -1.
    auto scaled = found({{{"du/dt"}, -2.0}, {{"u", "du/dx"}, -1.8}, {{"d^2u/dx^2"}, 0.24}});
    CHECK(*coefficient_mae(scaled, truth) == doctest::Approx(0.06).epsilon(1e-12));

    auto missing = found({{{"du/dt"}, -1.0}, {{"u", "du/dx"}, -1.0}});
    CHECK_FALSE(coefficient_mae(missing, truth).has_value());

    auto pruned = exact;
    pruned.kept[2] = false;
    CHECK_FALSE(coefficient_mae(pruned, truth).has_value());
}

TEST_CASE("structural Hamming distance")
{
    const auto truth = burgers_truth();
    auto exact = found({{{"du/dt"}, -1.0}, {{"u", "du/dx"}, -1.0}, {{"d^2u/dx^2"}, 0.1}});
    CHECK(shd(exact, truth) == 0);

    InitialGuess g;
    g.add(Term::from_labels({"du/dt"}), -1.0);
    g.add(Term::from_labels({"u", "du/dx"}), -1.0);
    g.add(Term::from_labels({"d^2u/dx^2"}), 0.1);
    CHECK(shd(g, truth) == 0);
    const auto space = enumerate_term_space(build_token_pool({{1, 2}, false}), 3);
    std::size_t added = 0;
    for (const auto& t : space.terms()) {
        if (added == 26) break;
        if (g.coefficient(t)) continue;
        g.add(t, 0.01);
        ++added;
    }
    CHECK(shd(g, truth) == 26);

    // Below the presence threshold counts as absent.
    InitialGuess faint;
    faint.add(Term::from_labels({"u"}), 1e-7);
    CHECK(shd(faint, truth) == 3);

    Chromosome empty;
    GroundTruth two{{{Term::from_labels({"u", "du/dx"}), -1.0}}, Term::from_labels({"du/dt"})};
    CHECK(shd(empty, two) == 2);

    // The target counts as present even though its coefficient is fixed.
    auto wrong = found({{{"du/dt"}, -1.0}, {{"u"}, 0.3}, {{"d^2u/dx^2"}, 0.0}});
    CHECK(shd(wrong, truth) == 3);
}

TEST_CASE("guess MAE scales to the balance term")
{
    const auto truth = burgers_truth();
    InitialGuess g;
    g.add(Term::from_labels({"du/dt"}), -2.0);
    g.add(Term::from_labels({"u", "du/dx"}), -1.8);
    CHECK(guess_mae(g, truth) == doctest::Approx((0.1 + 0.1) / 2));
    InitialGuess none;
    none.add(Term::from_labels({"u"}), 1.0);
    CHECK_THROWS_AS(guess_mae(none, truth), GuessError);
}

TEST_CASE("success implies zero structural distance")
{
    const auto truth = burgers_truth();
    auto good = found({{{"du/dt"}, -1.0}, {{"u", "du/dx"}, -0.98}, {{"d^2u/dx^2"}, 0.11}});
    auto close = found({{{"du/dt"}, -1.0}, {{"u", "du/dx"}, -0.999}, {{"d^2u/dx^2"}, 0.1}});
    auto bad = found({{{"du/dt"}, -1.0}, {{"u"}, 0.5}});
    const auto r = assess({good, close, bad}, truth);
    CHECK(r.success);
    CHECK(r.shd == 0);
    CHECK(*r.mae == doctest::Approx(0.0005));

    const auto f = assess({bad, good}, truth);
    CHECK_FALSE(f.success);
    CHECK_FALSE(f.mae.has_value());
    CHECK(f.shd == 3);
    CHECK(assess({}, truth).shd == 3);
}

TEST_CASE("mixing factor settings")
{
    CHECK(parse_mf("auto").autotune);
    CHECK(parse_mf("2.4").value == 2.4);
    CHECK(to_string(parse_mf("2.4")) == "2.4");
    CHECK(to_string(parse_mf("auto")) == "auto");
    CHECK_THROWS_AS(parse_mf("0.5"), ConfigError);
    CHECK_THROWS_AS(parse_mf("5.5"), ConfigError);
    CHECK_THROWS_AS(parse_mf("2.4x"), ConfigError);
    CHECK_THROWS_AS(parse_mf(""), ConfigError);
}

TEST_CASE("presets and settings files")
{
    const auto b = preset_config("viscous-burgers");
    CHECK(b.evo.population_size == 8);
    CHECK(b.evo.epochs == 7);
    CHECK(b.pool.max_orders == std::vector<int>{1, 2});
    CHECK(preset_config("kdv").evo.epochs == 90);
    CHECK_THROWS_AS(preset_config("heat"), ConfigError);

    const auto path = temp_path("settings.conf");
    {
        std::ofstream out(path);
        out << "# defaults\nruns = 7\nmf = 2.4, auto\nnoise = 0,50\n\nviscous-burgers.epochs = 11\nwave.epochs = 99  # other\n";
    }
    auto cfg = b;
    apply_settings(cfg, read_key_values(path));
    CHECK(cfg.runs == 7);
    REQUIRE(cfg.mfs.size() == 2);
    CHECK(cfg.mfs[1].autotune);
    CHECK(cfg.noise_pcts == std::vector<int>{0, 50});
    CHECK(cfg.evo.epochs == 11);

    write_key_value(path, "viscous-burgers.limit_magnitude", "0.25");
    write_key_value(path, "runs", "9");
    apply_settings(cfg, read_key_values(path));
    CHECK(cfg.limit_magnitude == 0.25);
    CHECK(cfg.runs == 9);

    CHECK_THROWS_AS(apply_settings(cfg, {{"popsize", "3"}}), ConfigError);
    CHECK_THROWS_AS(apply_settings(cfg, {{"runs", "-1"}}), ConfigError);
    CHECK_THROWS_AS(apply_settings(cfg, {{"seed", "x"}}), ConfigError);
    {
        std::ofstream out(path);
        out << "runs 7\n";
    }
    CHECK_THROWS_AS(read_key_values(path), IngestionError);
    CHECK_THROWS_AS(read_key_values(temp_path("missing.conf")), IngestionError);
    std::filesystem::remove(path);

    cfg = b;
    cfg.noise_pcts = {30};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = b;
    cfg.smooth_window = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("run seeds")
{
    CHECK(run_seed(1, 0, 0) == run_seed(1, 0, 0));
    CHECK(run_seed(1, 0, 0) != run_seed(1, 0, 1));
    CHECK(run_seed(1, 0, 0) != run_seed(1, 25, 0));
    CHECK(run_seed(1, 0, 0) != run_seed(2, 0, 0));
}

TEST_CASE("parallel_for visits every index once")
{
    for (std::size_t workers : {1, 3, 8}) {
        std::vector<std::atomic<int>> hits(50);
        parallel_for(50, workers, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) CHECK(h == 1);
    }
    CHECK_THROWS_AS(parallel_for(5, 2, [](std::size_t i) {
                        if (i == 3) throw ConfigError("boom");
                    }),
                    ConfigError);
}

TEST_CASE("records and summary layout")
{
    std::vector<RunRecord> recs(3);
    recs[0] = {7, Mode::Classical, std::nullopt, 0, true, 0.01, 0, 1.5, "a"};
    recs[1] = {8, Mode::Classical, std::nullopt, 0, false, std::nullopt, 3, 2.5, "b"};
    recs[2] = {7, Mode::Modified, 2.4, 0, true, 0.03, 0, 9.0, "c"};
    const auto csv = records_csv(recs);
    CHECK(csv.rfind("seed,mode,mf,noise_level_pct,success,mae,shd,best_equation\n", 0) == 0);
    CHECK(csv.find("8,classical,,0,0,,3,\"b\"") != std::string::npos);
    // Runtimes stay out of the records so they are reproducible.
    CHECK(csv.find("1.5") == std::string::npos);

    const auto sum = summary_csv(recs);
    CHECK(sum.find("classical,,0,2,1,0.5,0.01") != std::string::npos);
    CHECK(sum.find("modified,2.4,0,1,1,1,0.029999999999999999") != std::string::npos);
}

TEST_CASE("experiment records and determinism")
{
    const auto data = gen_viscous_burgers();
    auto cfg = quick_config();
    cfg.runs = 1;
    cfg.noise_pcts = {0};
    const auto one = run_experiment(data, cfg);
    REQUIRE(one.records.size() == 1);
    CHECK(one.records[0].seed == run_seed(42, 0, 0));
    CHECK(one.records[0].runtime_s > 0.0);
    if (one.records[0].success) CHECK(one.records[0].shd == 0);

    cfg = quick_config();
    const auto a = run_experiment(data, cfg);
    cfg.workers = 3;
    const auto b = run_experiment(data, cfg);
    CHECK(a.records.size() == 6);
    CHECK(records_csv(a.records) == records_csv(b.records));
    CHECK(summary_csv(a.records) == summary_csv(b.records));

    // Summary counts equal the record flags.
    std::size_t successes = 0;
    for (const auto& r : a.records) {
        successes += r.success;
        if (r.success) CHECK(r.shd == 0);
    }
    std::istringstream in(summary_csv(a.records));
    std::string line;
    std::getline(in, line);
    std::size_t summed = 0;
    while (std::getline(in, line)) {
        if (line.rfind("classical,", 0) != 0) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        summed += std::stoul(cols[4]);
    }
    CHECK(summed == successes);

    const auto dir = temp_path("experiment");
    std::filesystem::remove_all(dir);
    write_experiment(a, dir);
    for (const auto* f : {"records.csv", "summary.csv", "timings.csv"})
        CHECK(std::filesystem::exists(std::filesystem::path(dir) / f));
    CHECK(std::filesystem::exists(std::filesystem::path(dir) /
                                  ("result-" + std::to_string(a.records[0].seed) + "-classical.json")));
    std::filesystem::remove_all(dir);
}

TEST_CASE("modified runs without a guess fail without aborting the sweep")
{
    const auto data = gen_viscous_burgers();
    auto cfg = quick_config();
    cfg.runs = 1;
    cfg.noise_pcts = {0};
    cfg.modes = {Mode::Modified};
    // Guess generation fails without regularization weights.
    cfg.symnet.lambdas.clear();
    const auto r = run_experiment(data, cfg);
    REQUIRE(r.records.size() == 1);
    CHECK_FALSE(r.records[0].success);
    CHECK_FALSE(r.outcomes[0].error.empty());
}

TEST_CASE("noise preparation")
{
    const auto data = gen_viscous_burgers();
    auto cfg = quick_config();
    const auto clean = prepare_field(data.field, 0.0, 1, cfg);
    CHECK(clean.values() == data.field.values());
    const auto a = prepare_field(data.field, 0.01, 1, cfg);
    const auto b = prepare_field(data.field, 0.01, 1, cfg);
    CHECK(a.values() == b.values());
    CHECK(a.values() != data.field.values());
}

}
