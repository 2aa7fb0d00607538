#pragma once

#include "gfast/channel.hpp"
#include "gfast/de_common.hpp"
#include "gfast/detectors.hpp"
#include "gfast/turbo_engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gfast {

enum class ExperimentKind { per_tone, convergence, turbo, bandwidth, loop_length, impulse, ce_error, complexity };

std::string_view experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment(std::string_view name);

std::string_view ce_mode_name(CeMode mode);
CeMode parse_ce_mode(std::string_view name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::per_tone;
    bool full_grid = false;
    CableModelParams cable;
    std::optional<std::filesystem::path> channel_csv;
    int tones = 256; // active tones, subsampled uniformly from the grid (or from the CSV)
    FrameConfig frame;
    de::DeParams ce_params = de::channel_estimation_defaults();
    de::DeParams mud_params = de::detection_defaults();
    CeMode ce = CeMode::dea;
    std::vector<DetectorKind> detectors{DetectorKind::sud, DetectorKind::zf, DetectorKind::ml, DetectorKind::dea};
    std::vector<CeMode> estimators;                 // per-tone CE rows; empty means none
    std::vector<double> snr_db{20.0};
    std::vector<std::uint64_t> seeds{1};
    int frames = 1;                                 // turbo-style kinds, per (snr, seed)
    int instances = 100;                            // per-tone / complexity symbol vectors per (tone, snr, seed)
    std::vector<double> kappas{0.01, 0.1};
    double impulse_power_db = 20.0;
    std::vector<double> loop_lengths_m{100.0, 200.0, 300.0};
    std::vector<double> bandwidth_fractions{0.25, 0.5, 0.75, 1.0};
    bool reference = false;                         // add a perfect-CSI ML receiver to turbo-style kinds
    std::optional<std::filesystem::path> output;

    ToneGrid grid() const { return full_grid ? gfast::full_grid() : ToneGrid{}; }
    void validate() const;
};

// Applies one `key = value` setting; unknown keys and malformed values raise ConfigError.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Flat `key = value` file with `#` comments.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

struct MetricsRecord {
    std::string experiment;
    int tone = -1; // -1 for frame-level rows
    double snr_db = 0.0;
    int iteration = 0;
    std::string detector;
    std::string metric;
    double value = 0.0;
    std::int64_t evals = 0;
    std::uint64_t seed = 0;

    bool operator==(const MetricsRecord&) const = default;
};

inline constexpr const char* kCsvHeader = "experiment,tone,snr_db,iteration,detector,metric,value,evals,seed";

void write_csv(std::ostream& os, const std::vector<MetricsRecord>& rows);
std::vector<MetricsRecord> read_csv(std::istream& is);

// 100 * n_dea / n_ml.
double complexity_ratio(std::int64_t n_dea, std::int64_t n_ml);

// `count` tone indices spread uniformly over [0, span).
std::vector<int> subsample_tones(int span, int count);

// Normalized channels of the selected tones (synthetic or CSV).
std::vector<ToneChannel> build_channel(const ExperimentConfig& cfg, int span, int count);

// Multi-frame run of one receiver; counts are summed and NMSE averaged over frames.
std::vector<IterationTrace> run_link(const std::vector<ToneChannel>& tones, const FrameConfig& frame,
                                     const ReceiverConfig& rx, std::uint64_t seed, int frames);

// Runtime failure tied to a work item; maps to exit code 3.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

// Rows in deterministic order. Throws ConfigError for invalid configurations and
// NumericalFailure (naming tone and seed) for numerical breakdowns.
std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg);

// Worker count from GFAST_WORKERS, if set.
void apply_worker_env();

} // namespace gfast
