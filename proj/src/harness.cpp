#include "gfast/harness.hpp"

#include "gfast/estimation.hpp"
#include "gfast/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gfast {

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKinds[] = {
    {ExperimentKind::per_tone, "per-tone"},     {ExperimentKind::convergence, "convergence"},
    {ExperimentKind::turbo, "turbo"},           {ExperimentKind::bandwidth, "bandwidth"},
    {ExperimentKind::loop_length, "loop-length"}, {ExperimentKind::impulse, "impulse"},
    {ExperimentKind::ce_error, "ce-error"},     {ExperimentKind::complexity, "complexity"},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": '" + v + "' is not a number");
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used, 0);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": '" + v + "' is not an integer");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
        x = std::stoull(v, &used, 0);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F parse) {
    std::vector<T> out;
    for (const auto& item : split(v, ',')) {
        if (item.empty()) throw ConfigError(key + ": empty list element");
        out.push_back(parse(key, item));
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

bool apply_de_setting(de::DeParams& p, const std::string& field, const std::string& key, const std::string& v) {
    if (field == "population_size") p.population_size = static_cast<int>(to_int(key, v));
    else if (field == "greedy") p.greedy = to_double(key, v);
    else if (field == "adapt_rate") p.adapt_rate = to_double(key, v);
    else if (field == "sigma_lambda") p.sigma_lambda = to_double(key, v);
    else if (field == "sigma_cr") p.sigma_cr = to_double(key, v);
    else if (field == "max_generations") p.max_generations = static_cast<int>(to_int(key, v));
    else if (field == "stall_generations") p.stall_generations = static_cast<int>(to_int(key, v));
    else if (field == "init_lower") p.init_lower = to_double(key, v);
    else if (field == "init_upper") p.init_upper = to_double(key, v);
    else return false;
    return true;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

std::string_view experiment_name(ExperimentKind kind) {
    for (const auto& [k, name] : kKinds)
        if (k == kind) return name;
    return "?";
}

ExperimentKind parse_experiment(std::string_view name) {
    for (const auto& [k, n] : kKinds)
        if (n == name) return k;
    throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

std::string_view ce_mode_name(CeMode mode) {
    switch (mode) {
    case CeMode::dea: return "dea";
    case CeMode::ls: return "ls";
    case CeMode::perfect: return "perfect";
    }
    return "?";
}

CeMode parse_ce_mode(std::string_view name) {
    if (name == "dea") return CeMode::dea;
    if (name == "ls") return CeMode::ls;
    if (name == "perfect") return CeMode::perfect;
    throw ConfigError("unknown channel estimator '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (snr_db.empty()) throw ConfigError("snr list is empty");
    if (detectors.empty()) throw ConfigError("detector list is empty");
    if (tones < 1) throw ConfigError("tones must be positive");
    if (frames < 1) throw ConfigError("frames must be positive");
    if (instances < 1) throw ConfigError("instances must be positive");
    if (channel_csv && !std::filesystem::exists(*channel_csv))
        throw ConfigError("channel file '" + channel_csv->string() + "' does not exist");
    cable.validate();
    grid().validate();
    ce_params.validate();
    mud_params.validate();
    for (double k : kappas) ImpulseNoiseConfig{k, impulse_power_db}.validate();
    for (double f : bandwidth_fractions)
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("bandwidth fractions must lie in (0,1]");
    for (double l : loop_lengths_m)
        if (!(l > 0.0)) throw ConfigError("loop lengths must be positive");
    FrameConfig probe = frame;
    probe.num_tones_active = std::min(tones, grid().num_tones);
    probe.validate();
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string v = trim(raw_value);
    auto as_int = [&] { return static_cast<int>(to_int(key, v)); };

    if (key == "kind") cfg.kind = parse_experiment(v);
    else if (key == "full_grid") cfg.full_grid = to_bool(key, v);
    else if (key == "tones") cfg.tones = as_int();
    else if (key == "channel_csv") cfg.channel_csv = std::filesystem::path(v);
    else if (key == "channel_seed") cfg.cable.seed = to_u64(key, v);
    else if (key == "loop_length_m") {
        cfg.loop_lengths_m = to_list<double>(key, v, to_double);
        cfg.cable.loop_length_m = cfg.loop_lengths_m.front();
    } else if (key == "direct_atten_coeff") cfg.cable.direct_atten_coeff = to_double(key, v);
    else if (key == "fext_base_db") cfg.cable.fext_base_db = to_double(key, v);
    else if (key == "fext_freq_slope") cfg.cable.fext_freq_slope = to_double(key, v);
    else if (key == "fext_length_term") cfg.cable.fext_length_term = to_double(key, v);
    else if (key == "fext_spread_db") cfg.cable.fext_spread_db = to_double(key, v);
    else if (key == "lines") cfg.frame.lines = as_int();
    else if (key == "order") cfg.frame.order = as_int();
    else if (key == "pilot_symbols") cfg.frame.pilot_symbols = as_int();
    else if (key == "data_symbols") cfg.frame.data_symbols = as_int();
    else if (key == "turbo_outer_iters") cfg.frame.turbo_outer_iters = as_int();
    else if (key == "block_symbols") cfg.frame.block_symbols = as_int();
    else if (key == "inner_iterations") cfg.frame.inner_iterations = as_int();
    else if (key == "decoder_iterations") cfg.frame.decoder_iterations = as_int();
    else if (key == "ce") cfg.ce = parse_ce_mode(v);
    else if (key == "detectors")
        cfg.detectors = to_list<DetectorKind>(key, v, [](const std::string&, const std::string& s) {
            return parse_detector(s);
        });
    else if (key == "estimators") {
        cfg.estimators.clear();
        if (!v.empty() && v != "none")
            cfg.estimators = to_list<CeMode>(key, v, [](const std::string&, const std::string& s) {
                return parse_ce_mode(s);
            });
    } else if (key == "snr_db") cfg.snr_db = to_list<double>(key, v, to_double);
    else if (key == "seeds" || key == "seed") cfg.seeds = to_list<std::uint64_t>(key, v, to_u64);
    else if (key == "frames") cfg.frames = as_int();
    else if (key == "instances") cfg.instances = as_int();
    else if (key == "kappa") cfg.kappas = to_list<double>(key, v, to_double);
    else if (key == "impulse_power_db") cfg.impulse_power_db = to_double(key, v);
    else if (key == "bandwidth_fractions") cfg.bandwidth_fractions = to_list<double>(key, v, to_double);
    else if (key == "reference") cfg.reference = to_bool(key, v);
    else if (key == "output") cfg.output = std::filesystem::path(v);
    else if (key.rfind("ce.", 0) == 0 && apply_de_setting(cfg.ce_params, key.substr(3), key, v)) {
    } else if (key.rfind("mud.", 0) == 0 && apply_de_setting(cfg.mud_params, key.substr(4), key, v)) {
    } else throw ConfigError("unknown setting '" + key + "'");
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected 'key = value'");
        try {
            apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return base;
}

void write_csv(std::ostream& os, const std::vector<MetricsRecord>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        for (const auto* s : {&r.experiment, &r.detector, &r.metric})
            if (s->find_first_of(",\n\"") != std::string::npos)
                throw UsageError("CSV field '" + *s + "' contains a separator");
        os << r.experiment << ',' << r.tone << ',' << format_number(r.snr_db) << ',' << r.iteration << ','
           << r.detector << ',' << r.metric << ',' << format_number(r.value) << ',' << r.evals << ',' << r.seed
           << '\n';
    }
}

std::vector<MetricsRecord> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != kCsvHeader) throw ParseError("missing metrics CSV header");
    std::vector<MetricsRecord> rows;
    int n = 1;
    while (std::getline(is, line)) {
        ++n;
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 9) throw ParseError("line " + std::to_string(n) + ": expected 9 fields");
        try {
            MetricsRecord r;
            r.experiment = f[0];
            r.tone = static_cast<int>(to_int("tone", f[1]));
            r.snr_db = to_double("snr_db", f[2]);
            r.iteration = static_cast<int>(to_int("iteration", f[3]));
            r.detector = f[4];
            r.metric = f[5];
            r.value = to_double("value", f[6]);
            r.evals = to_int("evals", f[7]);
            r.seed = to_u64("seed", f[8]);
            rows.push_back(std::move(r));
        } catch (const ConfigError& e) {
            throw ParseError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return rows;
}

double complexity_ratio(std::int64_t n_dea, std::int64_t n_ml) {
    if (n_ml <= 0) throw UsageError("ML evaluation count must be positive");
    return 100.0 * static_cast<double>(n_dea) / static_cast<double>(n_ml);
}

std::vector<int> subsample_tones(int span, int count) {
    if (span < 1 || count < 1) throw ConfigError("tone selection needs a positive span and count");
    count = std::min(count, span);
    std::vector<int> idx(count);
    for (int i = 0; i < count; ++i)
        idx[i] = static_cast<int>((static_cast<long long>(2 * i + 1) * span) / (2LL * count));
    return idx;
}

std::vector<ToneChannel> build_channel(const ExperimentConfig& cfg, int span, int count) {
    std::vector<ToneChannel> raw;
    if (cfg.channel_csv) {
        auto all = load_channel_csv(*cfg.channel_csv, cfg.grid());
        span = std::min<int>(span, static_cast<int>(all.size()));
        for (int i : subsample_tones(span, count)) raw.push_back(all[i]);
    } else {
        raw = synthesize_tones(cfg.grid(), cfg.cable, cfg.frame.lines, subsample_tones(span, count));
    }
    std::vector<ToneChannel> out;
    out.reserve(raw.size());
    for (const auto& t : raw) out.push_back(normalize_direct_gain(t));
    return out;
}

std::vector<IterationTrace> run_link(const std::vector<ToneChannel>& tones, const FrameConfig& frame,
                                     const ReceiverConfig& rx, std::uint64_t seed, int frames) {
    std::vector<IterationTrace> total;
    for (int f = 0; f < frames; ++f) {
        const auto trace = run_turbo(tones, frame, rx, derive_seed(seed, {static_cast<std::uint64_t>(f)}));
        if (total.empty()) {
            total = trace;
            continue;
        }
        for (std::size_t i = 0; i < trace.size(); ++i) {
            auto& a = total[i];
            const auto& b = trace[i];
            a.nmse += b.nmse;
            a.ce_evals += b.ce_evals;
            a.mud_evals += b.mud_evals;
            a.bit_errors += b.bit_errors;
            a.bits += b.bits;
            a.symbol_errors += b.symbol_errors;
            a.symbols += b.symbols;
            for (std::size_t t = 0; t < a.tone_nmse.size(); ++t) {
                a.tone_nmse[t] += b.tone_nmse[t];
                a.tone_ser[t] += b.tone_ser[t];
            }
        }
    }
    for (auto& a : total) {
        a.nmse /= frames;
        for (std::size_t t = 0; t < a.tone_nmse.size(); ++t) {
            a.tone_nmse[t] /= frames;
            a.tone_ser[t] /= frames;
        }
        a.ber = a.bits ? static_cast<double>(a.bit_errors) / static_cast<double>(a.bits) : 0.0;
        a.ser = a.symbols ? static_cast<double>(a.symbol_errors) / static_cast<double>(a.symbols) : 0.0;
    }
    return total;
}

namespace {

std::uint64_t u64(long long v) { return static_cast<std::uint64_t>(v); }

// Converts numerical breakdowns into NumericalFailure naming the work item.
template <typename Fn>
void guarded(const std::string& where, Fn&& fn) {
    try {
        fn();
    } catch (const SingularMatrixError& e) {
        throw NumericalFailure(where + ": " + e.what());
    } catch (const IdentifiabilityError& e) {
        throw NumericalFailure(where + ": " + e.what());
    }
}

std::string where(int tone, std::uint64_t seed, double snr) {
    return "tone " + std::to_string(tone) + ", seed " + std::to_string(seed) + ", snr " + short_number(snr) + " dB";
}

struct Item {
    int tone_slot;
    std::size_t snr;
    std::size_t seed;
};

std::vector<Item> tone_items(std::size_t tones, const ExperimentConfig& cfg) {
    std::vector<Item> items;
    for (std::size_t t = 0; t < tones; ++t)
        for (std::size_t s = 0; s < cfg.snr_db.size(); ++s)
            for (std::size_t k = 0; k < cfg.seeds.size(); ++k) items.push_back({static_cast<int>(t), s, k});
    return items;
}

CVector random_symbols(int lines, const Constellation& c, Rng& rng, std::vector<int>& idx) {
    CVector x(lines);
    idx.resize(lines);
    for (int l = 0; l < lines; ++l) {
        idx[l] = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.order())));
        x[l] = c.points()[idx[l]];
    }
    return x;
}

DetectionResult detect(DetectorKind kind, const CVector& y, const CMatrix& h, const Constellation& c,
                       const de::DeParams& mud, std::uint64_t seed) {
    switch (kind) {
    case DetectorKind::sud: return sud_detect(y, h, c);
    case DetectorKind::zf: return zf_detect(y, h, c);
    case DetectorKind::ml: return ml_detect(y, h, c, Exec::serial);
    case DetectorKind::dea: return dea_mud(y, h, c, mud, seed);
    }
    throw UsageError("unknown detector");
}

ChannelEstimate estimate(CeMode mode, const CMatrix& h, const CMatrix& pilots, double sigma_w2,
                         const de::DeParams& params, Rng& rng, std::uint64_t seed) {
    if (mode == CeMode::perfect) return {h, 0.0, 0, 0};
    CMatrix y = h * pilots;
    for (int s = 0; s < pilots.cols(); ++s) y.col(s) += complex_gaussian(static_cast<int>(h.rows()), sigma_w2, rng);
    return mode == CeMode::ls ? ls_estimate(pilots, y) : dea_ce(pilots, y, params, seed);
}

std::vector<MetricsRecord> run_per_tone(const ExperimentConfig& cfg, bool parallel) {
    const int span = cfg.grid().num_tones;
    const auto channel = build_channel(cfg, span, cfg.tones);
    const auto c = Constellation::qam(cfg.frame.order);
    const int lines = cfg.frame.lines;
    const int k = c.bits_per_symbol();
    const CMatrix pilots = make_dft_pilots(lines, cfg.frame.pilot_symbols);
    const auto items = tone_items(channel.size(), cfg);
    std::vector<std::vector<MetricsRecord>> out(items.size());

    parallel_for(static_cast<long>(items.size()), parallel, [&](long n) {
        const auto& it = items[n];
        const int tone = channel[it.tone_slot].tone_index;
        const double snr = cfg.snr_db[it.snr];
        const std::uint64_t seed = cfg.seeds[it.seed];
        guarded(where(tone, seed, snr), [&] {
            const double sw2 = noise_variance(snr, cfg.frame.order);
            const CMatrix& h = channel[it.tone_slot].matrix;
            const std::uint64_t base = derive_seed(seed, {u64(tone), it.snr});
            Rng rng(derive_seed(base, {1}));
            auto row = [&](std::string det, std::string metric, double value, std::int64_t evals) {
                out[n].push_back({"per-tone", tone, snr, 0, std::move(det), std::move(metric), value, evals, seed});
            };

            for (CeMode e : cfg.estimators) {
                if (e == CeMode::perfect) continue;
                Rng erng(derive_seed(base, {2, static_cast<std::uint64_t>(e)}));
                double nm = 0.0, cf_sum = 0.0;
                std::int64_t evals = 0;
                for (int i = 0; i < cfg.instances; ++i) {
                    const auto est = estimate(e, h, pilots, sw2, cfg.ce_params, erng, derive_seed(base, {3, u64(i)}));
                    nm += nmse(est.matrix, h);
                    cf_sum += est.cf;
                    evals += est.eval_count;
                }
                const std::string name = std::string(ce_mode_name(e)) + "-ce";
                row(name, "nmse", nm / cfg.instances, evals / cfg.instances);
                row(name, "cf", cf_sum / cfg.instances, evals / cfg.instances);
            }

            const CMatrix h_hat = estimate(cfg.ce, h, pilots, sw2, cfg.ce_params, rng, derive_seed(base, {4})).matrix;
            std::vector<std::int64_t> sym_err(cfg.detectors.size()), bit_err(cfg.detectors.size()),
                evals(cfg.detectors.size());
            std::vector<int> idx;
            Bits truth(static_cast<std::size_t>(lines) * k);
            for (int i = 0; i < cfg.instances; ++i) {
                const CVector x = random_symbols(lines, c, rng, idx);
                for (int l = 0; l < lines; ++l)
                    unpack_label(c.labels()[idx[l]], k, std::span(truth).subspan(l * k, k));
                const CVector y = apply_channel(h, x, sw2, std::nullopt, false, rng);
                for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
                    const auto r = detect(cfg.detectors[d], y, h_hat, c, cfg.mud_params, derive_seed(base, {5, u64(i)}));
                    evals[d] += r.eval_count;
                    for (int l = 0; l < lines; ++l) {
                        bool wrong = false;
                        for (int j = 0; j < k; ++j) {
                            const bool e = r.bits[l * k + j] != truth[l * k + j];
                            bit_err[d] += e;
                            wrong = wrong || e;
                        }
                        sym_err[d] += wrong;
                    }
                }
            }
            for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
                const std::string name(detector_name(cfg.detectors[d]));
                const std::int64_t mean_evals = evals[d] / cfg.instances;
                row(name, "ser", static_cast<double>(sym_err[d]) / (static_cast<double>(cfg.instances) * lines),
                    mean_evals);
                row(name, "ber", static_cast<double>(bit_err[d]) / (static_cast<double>(cfg.instances) * lines * k),
                    mean_evals);
            }
        });
    });
    std::vector<MetricsRecord> rows;
    for (auto& v : out) rows.insert(rows.end(), v.begin(), v.end());
    return rows;
}

std::vector<MetricsRecord> run_convergence(const ExperimentConfig& cfg, bool parallel) {
    const int span = cfg.grid().num_tones;
    const auto channel = build_channel(cfg, span, cfg.tones);
    const auto c = Constellation::qam(cfg.frame.order);
    const int lines = cfg.frame.lines;
    const CMatrix pilots = make_dft_pilots(lines, cfg.frame.pilot_symbols);
    const auto items = tone_items(channel.size(), cfg);
    std::vector<std::vector<MetricsRecord>> out(items.size());
    const std::int64_t ps = cfg.ce_params.population_size;
    const std::int64_t pm = cfg.mud_params.population_size;

    parallel_for(static_cast<long>(items.size()), parallel, [&](long n) {
        const auto& it = items[n];
        const int tone = channel[it.tone_slot].tone_index;
        const double snr = cfg.snr_db[it.snr];
        const std::uint64_t seed = cfg.seeds[it.seed];
        guarded(where(tone, seed, snr), [&] {
            const double sw2 = noise_variance(snr, cfg.frame.order);
            const CMatrix& h = channel[it.tone_slot].matrix;
            const std::uint64_t base = derive_seed(seed, {u64(tone), it.snr});
            Rng rng(derive_seed(base, {1}));
            auto row = [&](const char* det, int g, double value, std::int64_t evals) {
                out[n].push_back({"convergence", tone, snr, g, det, "cf", value, evals, seed});
            };
            CMatrix y = h * pilots;
            for (int s = 0; s < pilots.cols(); ++s) y.col(s) += complex_gaussian(lines, sw2, rng);
            row("ls-ce", 0, ls_estimate(pilots, y).cf, 0);
            dea_ce(pilots, y, cfg.ce_params, derive_seed(base, {2}),
                   [&](int g, const CMatrix&, double cf) { row("dea-ce", g, cf, ps * (1 + g)); });

            std::vector<int> idx;
            const CVector x = random_symbols(lines, c, rng, idx);
            const CVector ys = apply_channel(h, x, sw2, std::nullopt, false, rng);
            const auto ml = ml_detect(ys, h, c, Exec::serial);
            row("ml", 0, ml.cf, ml.eval_count);
            dea_mud(ys, h, c, cfg.mud_params, derive_seed(base, {3}),
                    [&](int g, std::span<const std::uint8_t>, double cf) { row("dea", g, cf, pm * (1 + g)); });
        });
    });
    std::vector<MetricsRecord> rows;
    for (auto& v : out) rows.insert(rows.end(), v.begin(), v.end());
    return rows;
}

std::vector<MetricsRecord> run_complexity(const ExperimentConfig& cfg, bool parallel) {
    const int span = cfg.grid().num_tones;
    const auto channel = build_channel(cfg, span, cfg.tones);
    const auto c = Constellation::qam(cfg.frame.order);
    const int lines = cfg.frame.lines;
    const auto n_ml = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(c.order()), lines)));
    const auto items = tone_items(channel.size(), cfg);
    std::vector<std::vector<MetricsRecord>> out(items.size());

    parallel_for(static_cast<long>(items.size()), parallel, [&](long n) {
        const auto& it = items[n];
        const int tone = channel[it.tone_slot].tone_index;
        const double snr = cfg.snr_db[it.snr];
        const std::uint64_t seed = cfg.seeds[it.seed];
        guarded(where(tone, seed, snr), [&] {
            const double sw2 = noise_variance(snr, cfg.frame.order);
            const CMatrix& h = channel[it.tone_slot].matrix;
            const std::uint64_t base = derive_seed(seed, {u64(tone), it.snr});
            Rng rng(derive_seed(base, {1}));
            std::vector<int> idx;
            for (int i = 0; i < cfg.instances; ++i) {
                const CVector x = random_symbols(lines, c, rng, idx);
                const CVector y = apply_channel(h, x, sw2, std::nullopt, false, rng);
                const auto r = dea_mud(y, h, c, cfg.mud_params, derive_seed(base, {2, u64(i)}));
                out[n].push_back({"complexity", tone, snr, i, "dea", "evals", static_cast<double>(r.eval_count),
                                  r.eval_count, seed});
                out[n].push_back({"complexity", tone, snr, i, "ml", "evals", static_cast<double>(n_ml), n_ml, seed});
                out[n].push_back({"complexity", tone, snr, i, "dea", "complexity_pct",
                                  complexity_ratio(r.eval_count, n_ml), r.eval_count, seed});
            }
        });
    });
    std::vector<MetricsRecord> rows;
    for (auto& v : out) rows.insert(rows.end(), v.begin(), v.end());
    return rows;
}

// Shared driver of the frame-level kinds: one receiver per configured detector plus the optional reference.
void link_rows(const std::string& id, const std::vector<ToneChannel>& tones, const ExperimentConfig& cfg,
               CeMode ce, int outer_iters, const std::optional<ImpulseNoiseConfig>& impulse, bool with_bounds,
               std::vector<MetricsRecord>& rows) {
    FrameConfig frame = cfg.frame;
    frame.num_tones_active = static_cast<int>(tones.size());
    frame.turbo_outer_iters = outer_iters;
    for (double snr : cfg.snr_db) {
        frame.snr_db = snr;
        const double sw2 = noise_variance(snr, frame.order);
        for (std::uint64_t seed : cfg.seeds) {
            guarded("seed " + std::to_string(seed) + ", snr " + short_number(snr) + " dB (" + id + ")", [&] {
                auto emit = [&](const std::string& det, const std::vector<IterationTrace>& trace) {
                    for (const auto& e : trace) {
                        const std::int64_t ev = e.ce_evals + e.mud_evals;
                        rows.push_back({id, -1, snr, e.iteration, det, "ber", e.ber, ev, seed});
                        rows.push_back({id, -1, snr, e.iteration, det, "ser", e.ser, ev, seed});
                        rows.push_back({id, -1, snr, e.iteration, det, "nmse", e.nmse, ev, seed});
                    }
                };
                for (DetectorKind d : cfg.detectors) {
                    ReceiverConfig rx;
                    rx.ce = ce;
                    rx.detector = d;
                    rx.ce_params = cfg.ce_params;
                    rx.mud_params = cfg.mud_params;
                    rx.impulse = impulse;
                    emit(std::string(detector_name(d)), run_link(tones, frame, rx, seed, cfg.frames));
                }
                if (cfg.reference) {
                    ReceiverConfig rx;
                    rx.ce = CeMode::perfect;
                    rx.detector = DetectorKind::ml;
                    rx.impulse = impulse;
                    FrameConfig f0 = frame;
                    f0.turbo_outer_iters = 0;
                    emit("ml-perfect", run_link(tones, f0, rx, seed, cfg.frames));
                }
                if (with_bounds) {
                    double pilot = 0.0, full = 0.0;
                    for (const auto& t : tones) {
                        pilot += frame_ncrlb(t.matrix, frame.pilot_symbols, 1.0, sw2);
                        full += frame_ncrlb(t.matrix, frame.total_symbols(), 1.0, sw2);
                    }
                    const double n = static_cast<double>(tones.size());
                    for (int i = 0; i <= outer_iters; ++i)
                        rows.push_back({id, -1, snr, i, "ncrlb", "nmse", (i == 0 ? pilot : full) / n, 0, seed});
                }
            });
        }
    }
}

} // namespace

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const bool parallel = true;
    const int span = cfg.grid().num_tones;
    std::vector<MetricsRecord> rows;
    const int iters = cfg.frame.turbo_outer_iters;

    switch (cfg.kind) {
    case ExperimentKind::per_tone: rows = run_per_tone(cfg, parallel); break;
    case ExperimentKind::convergence: rows = run_convergence(cfg, parallel); break;
    case ExperimentKind::complexity: rows = run_complexity(cfg, parallel); break;
    case ExperimentKind::turbo:
        link_rows("turbo", build_channel(cfg, span, cfg.tones), cfg, cfg.ce, iters, std::nullopt, true, rows);
        break;
    case ExperimentKind::bandwidth:
        for (double f : cfg.bandwidth_fractions) {
            const int prefix = std::max(1, static_cast<int>(std::lround(f * span)));
            const int count = std::max(1, static_cast<int>(std::lround(f * std::min(cfg.tones, span))));
            link_rows("bandwidth:" + std::to_string(prefix), build_channel(cfg, prefix, count), cfg, cfg.ce, iters,
                      std::nullopt, true, rows);
        }
        break;
    case ExperimentKind::loop_length:
        for (double len : cfg.loop_lengths_m) {
            ExperimentConfig c = cfg;
            c.cable.loop_length_m = len;
            link_rows("loop-length:" + short_number(len), build_channel(c, span, cfg.tones), c, cfg.ce, iters,
                      std::nullopt, false, rows);
        }
        break;
    case ExperimentKind::impulse:
        for (double kappa : cfg.kappas)
            link_rows("impulse:" + short_number(kappa), build_channel(cfg, span, cfg.tones), cfg, cfg.ce, iters,
                      ImpulseNoiseConfig{kappa, cfg.impulse_power_db}, false, rows);
        break;
    case ExperimentKind::ce_error: {
        const auto tones = build_channel(cfg, span, cfg.tones);
        link_rows("ce-error:perfect", tones, cfg, CeMode::perfect, 0, std::nullopt, false, rows);
        link_rows("ce-error:estimated", tones, cfg, cfg.ce, iters, std::nullopt, false, rows);
        break;
    }
    }

    std::stable_sort(rows.begin(), rows.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
        return std::tie(a.experiment, a.tone, a.snr_db, a.seed, a.detector, a.iteration) <
               std::tie(b.experiment, b.tone, b.snr_db, b.seed, b.detector, b.iteration);
    });
    return rows;
}

void apply_worker_env() {
    const char* env = std::getenv("GFAST_WORKERS");
    if (!env || !*env) return;
    const long long n = to_int("GFAST_WORKERS", env);
    if (n < 1) throw ConfigError("GFAST_WORKERS must be a positive integer");
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(n));
#endif
}

} // namespace gfast
