#pragma once

#include "kedisc/datasets.hpp"
#include "kedisc/evolution.hpp"
#include "kedisc/knowledge.hpp"
#include "kedisc/symnet.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kedisc {

inline constexpr double kPresenceThreshold = 1e-6;

/// Mean |c_found - c_true| over the ground-truth terms, after scaling the found
/// equation so the truth's lhs has coefficient -1. Absent unless the kept term set
/// equals the truth's.
std::optional<double> coefficient_mae(const Chromosome& found, const GroundTruth& truth);

/// Terms to add plus terms to remove; a term is present when |c| >= threshold.
std::size_t shd(const Chromosome& found, const GroundTruth& truth, double threshold = kPresenceThreshold);
std::size_t shd(const InitialGuess& found, const GroundTruth& truth, double threshold = kPresenceThreshold);

/// Mean |c_guess - c_true| over the ground-truth terms with the guess scaled to lhs -1;
/// missing terms count as 0.
double guess_mae(const InitialGuess& guess, const GroundTruth& truth);

/// "-1 du/dt + -0.99 du/dx * u + ..." over kept terms.
std::string format_equation(const Chromosome& c);

struct MfSetting {
    bool autotune = false;
    double value = kDefaultMixingFactor;
};

std::string to_string(const MfSetting& m);
MfSetting parse_mf(const std::string& s);

struct ExperimentConfig {
    std::string equation = "viscous-burgers";
    std::size_t runs = 50;
    std::vector<Mode> modes{Mode::Classical, Mode::Modified};
    /// Only used by modified runs.
    std::vector<MfSetting> mfs{MfSetting{}};
    std::vector<int> noise_pcts{0, 25, 50, 75, 100};
    double limit_magnitude = 1e-3;
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    EvolutionConfig evo;
    TokenPoolConfig pool;
    TrainSpec symnet;
    TuneOptions tune;
    /// Savitzky-Golay window applied to noised fields (0 disables).
    int smooth_window = 9;
    int smooth_degree = 3;
    /// Also smooth noise-free fields.
    bool smooth_clean = false;
    /// Classical runs per magnitude during calibration (0: use runs).
    std::size_t calibration_runs = 0;

    void validate() const;
};

/// Population size, epochs, term count, t_max and derivative caps per equation.
ExperimentConfig preset_config(const std::string& equation);

/// key = value lines; '#' starts a comment. Throws IngestionError on malformed lines.
std::map<std::string, std::string> read_key_values(const std::string& path);
/// Applies plain keys and keys prefixed with "<equation>.". Unknown keys are errors.
void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv);
/// Sets or replaces one key in a key = value file, creating it if needed.
void write_key_value(const std::string& path, const std::string& key, const std::string& value);

struct RunRecord {
    std::uint64_t seed = 0;
    Mode mode = Mode::Classical;
    std::optional<double> mf;
    int noise_level_pct = 0;
    bool success = false;
    std::optional<double> mae;
    std::size_t shd = 0;
    double runtime_s = 0.0;
    std::string best_equation;
};

struct RunOutcome {
    RunRecord record;
    std::vector<Chromosome> population;
    std::string error;
};

TermSpace build_space(const ExperimentConfig& cfg);

/// Noise (relative magnitude) then smoothing when the field was noised or
/// smooth_clean is set.
Field prepare_field(const Field& clean, double magnitude, std::uint64_t seed, const ExperimentConfig& cfg);

TermEvaluator make_evaluator(const Field& f, const ExperimentConfig& cfg);

GuessResult make_guess(const TermEvaluator& eval, const ExperimentConfig& cfg);

/// Success if the fittest individual has the truth's structure. The MAE is the
/// minimum over all final individuals of that structure.
RunRecord assess(const std::vector<Chromosome>& population, const GroundTruth& truth);

/// Evolution on an already prepared field. Errors are caught into the outcome.
RunOutcome run_once(const TermEvaluator& eval, const TermSpace& space, const GroundTruth& truth,
                    const ExperimentConfig& cfg, Mode mode, double mf, const InitialGuess* guess,
                    std::uint64_t seed);

/// Seed of run r at noise level pct; shared by all modes and mixing factors.
std::uint64_t run_seed(std::uint64_t master, int pct, std::size_t run);

/// Calls fn(i) for i < n on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::vector<RunOutcome> outcomes;
    /// Seconds spent generating the guess per noise level.
    std::map<int, double> guess_seconds;
    std::map<int, GuessResult> guesses;
    std::map<int, double> tuned_mf;
};

ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& cfg);

/// Classical successes over `runs` seeds at a noise magnitude.
std::size_t classical_successes(const Dataset& data, const ExperimentConfig& cfg, double magnitude);

struct CalibrationResult {
    double limit = 0.0;
    /// (magnitude, successes) in evaluation order.
    std::vector<std::pair<double, std::size_t>> trace;
};

/// Smallest magnitude in [1e-6, 10] with zero classical successes: factor-of-2
/// bracketing from cfg.limit_magnitude, then 10 geometric bisection steps.
CalibrationResult calibrate_limit_magnitude(const Dataset& data, const ExperimentConfig& cfg);

std::string records_csv(const std::vector<RunRecord>& records);
std::string summary_csv(const std::vector<RunRecord>& records);
std::string result_json(const RunOutcome& o);
/// Writes records.csv, summary.csv, timings.csv and result-*.json into dir.
void write_experiment(const ExperimentResult& r, const std::string& dir);

} // namespace kedisc
