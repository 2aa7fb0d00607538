#include "gfast/harness.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace gfast;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "gfast_harness_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GFAST_SIM_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig per_tone_config() {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::per_tone;
    cfg.tones = 8;
    cfg.seeds = {1, 2};
    cfg.detectors = {DetectorKind::sud, DetectorKind::zf, DetectorKind::dea};
    cfg.instances = 5;
    cfg.ce = CeMode::ls;
    return cfg;
}

} // namespace

TEST_CASE("experiment and estimator names round trip") {
    for (auto k : {ExperimentKind::per_tone, ExperimentKind::convergence, ExperimentKind::turbo,
                   ExperimentKind::bandwidth, ExperimentKind::loop_length, ExperimentKind::impulse,
                   ExperimentKind::ce_error, ExperimentKind::complexity})
        CHECK(parse_experiment(experiment_name(k)) == k);
    for (auto m : {CeMode::dea, CeMode::ls, CeMode::perfect}) CHECK(parse_ce_mode(ce_mode_name(m)) == m);
    CHECK_THROWS_AS(parse_experiment("sweep"), ConfigError);
    CHECK_THROWS_AS(parse_ce_mode("mmse"), ConfigError);
}

TEST_CASE("Table I defaults") {
    const ExperimentConfig cfg;
    CHECK(cfg.ce_params.population_size == 100);
    CHECK(cfg.ce_params.greedy == 0.1);
    CHECK(cfg.ce_params.adapt_rate == 0.1);
    CHECK(cfg.mud_params.adapt_rate == 0.8);
    CHECK(cfg.mud_params.max_generations == 100);
    CHECK(cfg.mud_params.stall_generations == 20);
    CHECK(cfg.frame.lines == 4);
    CHECK(cfg.frame.order == 16);
    CHECK(cfg.tones == 256);
    CHECK(cfg.grid().num_tones == 256);
    ExperimentConfig full = cfg;
    full.full_grid = true;
    CHECK(full.grid().num_tones == 4096);
}

TEST_CASE("settings and config files") {
    ExperimentConfig cfg;
    apply_setting(cfg, "snr_db", "10, 20,30");
    CHECK(cfg.snr_db == std::vector<double>{10, 20, 30});
    apply_setting(cfg, " mud.max_generations ", " 45 ");
    CHECK(cfg.mud_params.max_generations == 45);
    apply_setting(cfg, "ce.greedy", "0.2");
    CHECK(cfg.ce_params.greedy == 0.2);
    apply_setting(cfg, "detectors", "ml,dea");
    CHECK(cfg.detectors == std::vector<DetectorKind>{DetectorKind::ml, DetectorKind::dea});
    apply_setting(cfg, "loop_length_m", "150,250");
    CHECK(cfg.cable.loop_length_m == 150.0);
    apply_setting(cfg, "seeds", "0x10");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{16});
    CHECK_THROWS_AS(apply_setting(cfg, "population", "10"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "tones", "many"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "seeds", "-1"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "snr_db", "20dB"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "detectors", "sud,mmse"), ConfigError);

    const auto path = scratch("cfg.txt");
    write_file(path, "# desk run\nkind = complexity\n\ntones = 4   # few\nmud.population_size = 50\n");
    const auto loaded = load_config(path);
    CHECK(loaded.kind == ExperimentKind::complexity);
    CHECK(loaded.tones == 4);
    CHECK(loaded.mud_params.population_size == 50);

    write_file(path, "kind = complexity\nbogus = 1\n");
    try {
        load_config(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cfg.txt:2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config(scratch("missing.txt")), ConfigError);
}

TEST_CASE("configuration validation") {
    auto bad = [](auto mutate) {
        ExperimentConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    };
    bad([](ExperimentConfig& c) { c.seeds.clear(); });
    bad([](ExperimentConfig& c) { c.snr_db.clear(); });
    bad([](ExperimentConfig& c) { c.detectors.clear(); });
    bad([](ExperimentConfig& c) { c.channel_csv = "/nonexistent/channel.csv"; });
    bad([](ExperimentConfig& c) { c.kappas = {1.5}; });
    bad([](ExperimentConfig& c) { c.bandwidth_fractions = {0.0}; });
    bad([](ExperimentConfig& c) { c.frame.pilot_symbols = 2; });
    bad([](ExperimentConfig& c) { c.mud_params.population_size = 2; });
    CHECK_NOTHROW(ExperimentConfig{}.validate());
}

TEST_CASE("complexity ratio") {
    CHECK(complexity_ratio(3300, 65536) == doctest::Approx(5.035).epsilon(1e-3));
    CHECK(complexity_ratio(65536, 65536) == 100.0);
    CHECK(complexity_ratio(0, 65536) == 0.0);
    CHECK_THROWS_AS(complexity_ratio(1, 0), UsageError);
}

TEST_CASE("tone subsampling") {
    CHECK(subsample_tones(256, 4) == std::vector<int>{32, 96, 160, 224});
    CHECK(subsample_tones(4096, 256).back() == 4088);
    CHECK(subsample_tones(3, 8) == std::vector<int>{0, 1, 2});
    CHECK_THROWS_AS(subsample_tones(0, 1), ConfigError);
}

TEST_CASE("CSV round trip") {
    std::vector<MetricsRecord> rows{
        {"turbo", -1, 20.0, 3, "dea", "nmse", 1.0 / 3.0, 123456789, 7},
        {"per-tone", 17, -2.5, 0, "ml", "ser", 1e-300, 65536, 18446744073709551615ULL},
        {"impulse:0.1", 4, 30.0, 1, "zf", "ber", 0.0, 0, 0},
    };
    std::stringstream ss;
    write_csv(ss, rows);
    CHECK(ss.str().rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    CHECK(read_csv(ss) == rows);

    std::stringstream broken("experiment,tone\n");
    CHECK_THROWS_AS(read_csv(broken), ParseError);
    std::stringstream short_row(std::string(kCsvHeader) + "\nturbo,1,2\n");
    CHECK_THROWS_AS(read_csv(short_row), ParseError);
    std::stringstream bad_number(std::string(kCsvHeader) + "\nturbo,x,20,0,dea,ber,0,0,1\n");
    CHECK_THROWS_AS(read_csv(bad_number), ParseError);
    std::stringstream sink;
    CHECK_THROWS_AS(write_csv(sink, {{"a,b", 0, 0, 0, "d", "m", 0, 0, 0}}), UsageError);
}

TEST_CASE("per-tone row accounting") {
    const auto rows = run_experiment(per_tone_config());
    CHECK(rows.size() == 8u * 2 * 3 * 2);
    std::set<int> tones;
    for (const auto& r : rows) {
        tones.insert(r.tone);
        CHECK(r.experiment == "per-tone");
        CHECK((r.metric == "ser" || r.metric == "ber"));
        CHECK(r.value >= 0.0);
        CHECK(r.value <= 1.0);
    }
    CHECK(tones.size() == 8);

    auto with_ce = per_tone_config();
    with_ce.estimators = {CeMode::ls, CeMode::dea};
    with_ce.tones = 2;
    with_ce.seeds = {1};
    const auto ce_rows = run_experiment(with_ce);
    CHECK(ce_rows.size() == 2u * (3 * 2 + 2 * 2));
    for (const auto& r : ce_rows)
        if (r.detector == "dea-ce") CHECK(r.evals % 100 == 0);
}

TEST_CASE("runs are byte-identical") {
    auto cfg = per_tone_config();
    cfg.tones = 3;
    std::stringstream a, b;
    write_csv(a, run_experiment(cfg));
    write_csv(b, run_experiment(cfg));
    CHECK(a.str() == b.str());
    cfg.seeds = {3};
    std::stringstream c;
    write_csv(c, run_experiment(cfg));
    CHECK(c.str() != a.str());
}

TEST_CASE("complexity rows at defaults") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::complexity;
    cfg.tones = 2;
    cfg.instances = 3;
    const auto rows = run_experiment(cfg);
    CHECK(rows.size() == 2u * 3 * 3);
    for (const auto& r : rows) {
        if (r.detector == "ml") CHECK(r.evals == 65536);
        if (r.detector == "dea") CHECK(r.evals % 100 == 0);
        if (r.metric == "complexity_pct") CHECK(r.value == doctest::Approx(100.0 * r.evals / 65536.0));
    }
}

TEST_CASE("convergence traces count evaluations per generation") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::convergence;
    cfg.tones = 1;
    const auto rows = run_experiment(cfg);
    double last_ce = 1e300, last_mud = 1e300;
    int ls = 0, ml = 0;
    for (const auto& r : rows) {
        if (r.detector == "dea-ce") {
            CHECK(r.evals == 100 * (1 + r.iteration));
            CHECK(r.value <= last_ce);
            last_ce = r.value;
        } else if (r.detector == "dea") {
            CHECK(r.evals == 100 * (1 + r.iteration));
            CHECK(r.value <= last_mud);
            last_mud = r.value;
        }
        ls += r.detector == "ls-ce";
        ml += r.detector == "ml";
    }
    CHECK(ls == 1);
    CHECK(ml == 1);
}

TEST_CASE("frame-level kinds label their sweeps") {
    ExperimentConfig cfg;
    cfg.tones = 4;
    cfg.frame.data_symbols = 64;
    cfg.frame.turbo_outer_iters = 1;
    cfg.ce = CeMode::ls;
    cfg.detectors = {DetectorKind::zf};

    cfg.kind = ExperimentKind::turbo;
    auto rows = run_experiment(cfg);
    CHECK(rows.size() == 2u * 3 + 2);
    int bounds = 0;
    for (const auto& r : rows) bounds += r.detector == "ncrlb";
    CHECK(bounds == 2);

    cfg.kind = ExperimentKind::bandwidth;
    cfg.bandwidth_fractions = {0.5, 1.0};
    std::set<std::string> ids;
    for (const auto& r : run_experiment(cfg)) ids.insert(r.experiment);
    CHECK(ids == std::set<std::string>{"bandwidth:128", "bandwidth:256"});

    cfg.kind = ExperimentKind::impulse;
    cfg.kappas = {0.01, 0.1};
    ids.clear();
    for (const auto& r : run_experiment(cfg)) ids.insert(r.experiment);
    CHECK(ids == std::set<std::string>{"impulse:0.01", "impulse:0.1"});

    cfg.kind = ExperimentKind::ce_error;
    ids.clear();
    for (const auto& r : run_experiment(cfg)) ids.insert(r.experiment);
    CHECK(ids == std::set<std::string>{"ce-error:estimated", "ce-error:perfect"});

    cfg.kind = ExperimentKind::loop_length;
    cfg.loop_lengths_m = {100, 300};
    ids.clear();
    for (const auto& r : run_experiment(cfg)) ids.insert(r.experiment);
    CHECK(ids == std::set<std::string>{"loop-length:100", "loop-length:300"});
}

TEST_CASE("numerical failures name the tone and seed") {
    const auto path = scratch("singular.csv");
    std::ofstream os(path);
    os << "tone,l,m,re,im\n";
    for (int t = 0; t < 2; ++t)
        for (int l = 1; l <= 4; ++l)
            for (int m = 1; m <= 4; ++m) {
                const bool zero = t == 1 && l == 2 && m == 2;
                os << t << ',' << l << ',' << m << ',' << (l == m && !zero ? 1.0 : 0.01) * (zero ? 0.0 : 1.0)
                   << ",0\n";
            }
    os.close();

    auto cfg = per_tone_config();
    cfg.channel_csv = path;
    cfg.tones = 2;
    cfg.seeds = {5};
    cfg.detectors = {DetectorKind::sud};
    cfg.ce = CeMode::perfect;
    try {
        run_experiment(cfg);
        FAIL("expected NumericalFailure");
    } catch (const NumericalFailure& e) {
        const std::string msg = e.what();
        CHECK(msg.find("tone 1") != std::string::npos);
        CHECK(msg.find("seed 5") != std::string::npos);
    }
}

TEST_CASE("command-line exit codes") {
    const auto out = scratch("cli.csv");
    CHECK(run_cli("complexity --tones 2 --instances 2 -o " + out.string()) == 0);
    const auto text = read_file(out);
    CHECK(text.rfind(kCsvHeader, 0) == 0);
    std::stringstream ss(text);
    CHECK(read_csv(ss).size() == 12);

    CHECK(run_cli("complexity --no-such-flag") == 2);
    CHECK(run_cli("complexity --set bogus=1") == 2);
    CHECK(run_cli("per-tone --config /nonexistent/cfg.txt") == 2);
    CHECK(run_cli("per-tone --channel-csv " + scratch("singular.csv").string() +
                  " --tones 2 --detectors sud --ce perfect --instances 2 --seed 5") == 3);
}
