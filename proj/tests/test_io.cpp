#include "tbe/io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "tbe/rng.hpp"

using namespace tbe;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    auto dir = fs::temp_directory_path() / "tbe_io_tests";
    fs::create_directories(dir);
    return (dir / name).string();
}

std::vector<TimeTagEvent> sample_events() {
    return {
        {Channel::Trigger, 1ULL << 40},
        {Channel::Alice, (1ULL << 40) + 3000},
        {Channel::Bob, (1ULL << 40) + 6123},
        {Channel::Trigger, (1ULL << 40) + 13160},
    };
}

}  // namespace

TEST_CASE("matrix json round trip is bit exact") {
    auto rng = make_stream(1, 1);
    Mat4 m = random_matrix(rng);
    auto back = io::matrix_from_json(io::matrix_to_json(m));
    CHECK(max_abs_diff(m, back) == 0.0);

    auto p = tmp_path("mat.json");
    io::write_matrix(p, m);
    CHECK(max_abs_diff(io::read_matrix(p), m) == 0.0);

    CHECK_THROWS_WITH_AS(io::matrix_from_json("{}"), doctest::Contains("re"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(io::matrix_from_json("not json"), doctest::Contains("matrix"),
                         std::invalid_argument);
    CHECK_THROWS_AS(io::read_matrix(tmp_path("missing.json")), std::runtime_error);
}

TEST_CASE("binary stream round trip and corruption detection") {
    auto ev = sample_events();
    auto p = tmp_path("stream.bin");
    io::write_stream_bin(p, ev);
    auto back = io::read_stream_bin(p);
    REQUIRE(back.size() == ev.size());
    for (size_t i = 0; i < ev.size(); ++i) {
        CHECK(back[i].channel == ev[i].channel);
        CHECK(back[i].timestamp_ps == ev[i].timestamp_ps);
    }
    // extension dispatch
    CHECK(io::read_stream(p).size() == ev.size());

    auto raw = io::read_text_file(p);
    io::write_text_file(tmp_path("trunc.bin"), raw.substr(0, raw.size() - 3));
    CHECK_THROWS_WITH_AS(io::read_stream_bin(tmp_path("trunc.bin")),
                         doctest::Contains("truncated"), std::invalid_argument);

    auto bad_magic = raw;
    bad_magic[0] = 'X';
    io::write_text_file(tmp_path("magic.bin"), bad_magic);
    CHECK_THROWS_WITH_AS(io::read_stream_bin(tmp_path("magic.bin")),
                         doctest::Contains("magic"), std::invalid_argument);

    auto bad_chan = raw;
    bad_chan[16] = char(7);  // first record's channel byte
    io::write_text_file(tmp_path("chan.bin"), bad_chan);
    CHECK_THROWS_WITH_AS(io::read_stream_bin(tmp_path("chan.bin")),
                         doctest::Contains("channel"), std::invalid_argument);
}

TEST_CASE("csv stream round trip") {
    auto ev = sample_events();
    auto p = tmp_path("stream.csv");
    io::write_stream_csv(p, ev);
    auto back = io::read_stream(p);  // dispatches to CSV
    REQUIRE(back.size() == ev.size());
    for (size_t i = 0; i < ev.size(); ++i) {
        CHECK(back[i].channel == ev[i].channel);
        CHECK(back[i].timestamp_ps == ev[i].timestamp_ps);
    }

    io::write_text_file(tmp_path("bad.csv"), "channel,timestamp_ps\n0,12\nwhat,now\n");
    CHECK_THROWS_WITH_AS(io::read_stream_csv(tmp_path("bad.csv")),
                         doctest::Contains("malformed"), std::invalid_argument);
    io::write_text_file(tmp_path("badchan.csv"), "9,12\n");
    CHECK_THROWS_WITH_AS(io::read_stream_csv(tmp_path("badchan.csv")),
                         doctest::Contains("channel"), std::invalid_argument);
}

TEST_CASE("histogram csv round trip") {
    CoincidenceHistogram2D h;
    h.bin_width = 200e-12;
    h.origin = -4e-9;
    h.nx = 3;
    h.ny = 4;
    h.integration_time = 2.5;
    h.counts.assign(12, 0);
    h.at(0, 0) = 7;
    h.at(2, 3) = 11;
    h.at(1, 2) = 5;

    auto p = tmp_path("hist.csv");
    io::write_histogram_csv(p, h);
    auto back = io::read_histogram_csv(p);
    CHECK(back.nx == h.nx);
    CHECK(back.ny == h.ny);
    CHECK(back.bin_width == doctest::Approx(h.bin_width).epsilon(1e-15));
    CHECK(back.origin == doctest::Approx(h.origin).epsilon(1e-15));
    CHECK(back.integration_time == doctest::Approx(2.5));
    CHECK(back.counts == h.counts);

    io::write_text_file(tmp_path("empty.csv"), "");
    CHECK_THROWS_WITH_AS(io::read_histogram_csv(tmp_path("empty.csv")),
                         doctest::Contains("header"), std::invalid_argument);
}

TEST_CASE("mode field csv round trip") {
    auto f = synthesize(ModeModel::gaussian(3.9), 0.5);
    auto p = tmp_path("field.csv");
    io::write_modefield_csv(p, f);
    auto back = io::read_modefield_csv(p);
    CHECK(back.nx == f.nx);
    CHECK(back.ny == f.ny);
    CHECK(back.dx == f.dx);
    CHECK(back.dy == f.dy);
    REQUIRE(back.amps.size() == f.amps.size());
    for (size_t i = 0; i < f.amps.size(); ++i) CHECK(back.amps[i] == f.amps[i]);
}

TEST_CASE("projection records json round trip") {
    std::array<PeakCounts, 4> pcs{};
    int64_t v = 3;
    for (auto& pc : pcs)
        for (int ta = -1; ta <= 1; ++ta)
            for (int tb = -1; tb <= 1; ++tb) pc.at(ta, tb) = v += 17;
    auto recs = assemble_projections(pcs);

    auto back = io::records_from_json(io::records_to_json(recs));
    REQUIRE(back.size() == recs.size());
    for (size_t i = 0; i < recs.size(); ++i) {
        for (int k = 0; k < 4; ++k)
            CHECK(back[i].projector.a[size_t(k)] == recs[i].projector.a[size_t(k)]);
        CHECK(back[i].count == recs[i].count);
        CHECK(back[i].setting == recs[i].setting);
        CHECK(back[i].peak == recs[i].peak);
        CHECK(back[i].cell_ta == recs[i].cell_ta);
        CHECK(back[i].cell_tb == recs[i].cell_tb);
        CHECK(back[i].weight == recs[i].weight);
    }

    auto p = tmp_path("records.json");
    io::write_records(p, recs);
    CHECK(io::read_records(p).size() == recs.size());

    nlohmann::json j = nlohmann::json::parse(io::records_to_json(recs));
    j[0]["setting"] = "bogus";
    CHECK_THROWS_WITH_AS(io::records_from_json(j.dump()), doctest::Contains("setting"),
                         std::invalid_argument);
}

TEST_CASE("config json round trip and field validation") {
    ExperimentConfig cfg;
    cfg.visibility = 0.87;
    cfg.rng_seed = 424242;
    cfg.gated_triggers = false;
    auto text = io::config_to_json(cfg);
    auto back = io::config_from_json(text);
    CHECK(back.visibility == cfg.visibility);
    CHECK(back.rng_seed == cfg.rng_seed);
    CHECK(back.gated_triggers == cfg.gated_triggers);
    CHECK(back.rep_rate == cfg.rep_rate);
    CHECK(back.bin_delay == cfg.bin_delay);
    CHECK(back.double_pairs == cfg.double_pairs);

    auto j = nlohmann::json::parse(text);
    j.erase("rep_rate");
    CHECK_THROWS_WITH_AS(io::config_from_json(j.dump()),
                         doctest::Contains("missing field: rep_rate"), std::invalid_argument);

    j = nlohmann::json::parse(text);
    j["mystery"] = 1;
    CHECK_THROWS_WITH_AS(io::config_from_json(j.dump()),
                         doctest::Contains("unknown field: mystery"), std::invalid_argument);

    j = nlohmann::json::parse(text);
    j["visibility"] = "high";
    CHECK_THROWS_WITH_AS(io::config_from_json(j.dump()), doctest::Contains("visibility"),
                         std::invalid_argument);

    j = nlohmann::json::parse(text);
    j["rng_seed"] = -4;
    CHECK_THROWS_WITH_AS(io::config_from_json(j.dump()), doctest::Contains("rng_seed"),
                         std::invalid_argument);

    j = nlohmann::json::parse(text);
    j["visibility"] = 1.7;  // structurally fine, physically invalid
    CHECK_THROWS_WITH_AS(io::config_from_json(j.dump()), doctest::Contains("visibility"),
                         std::invalid_argument);

    // the shipped config carries the reference apparatus parameters and
    // passes physical validation
    auto shipped = io::read_config(data_dir() + "/default_config.json");
    shipped.validate();
    CHECK(shipped.rep_rate == 76e6);
    CHECK(shipped.bin_delay == 3e-9);
    CHECK(shipped.pair_prob == 1.2e-4);
    CHECK(shipped.visibility == 0.91);
    CHECK(shipped.detector_jitter_sigma == 4e-11);
    CHECK(shipped.dead_time == 2e-9);
    CHECK(shipped.det_efficiency_alice == 0.6);
    CHECK(shipped.transmission_alice == 0.06);
    CHECK(shipped.rng_seed == 1);
    CHECK(shipped.trigger_decimation == 1);
    CHECK(shipped.gated_triggers);
}

TEST_CASE("tomography result json is complete") {
    std::array<PeakCounts, 4> pcs{};
    auto recs = assemble_projections(pcs);
    auto state = DensityMatrix::phi_plus();
    for (auto& r : recs)
        r.count = std::llround(2e5 * r.weight * expval(state.m, r.projector).real());
    auto res = monte_carlo(recs, 8, 99, {}, true, false);

    auto j = nlohmann::json::parse(io::tomography_result_to_json(res));
    CHECK(j.at("mc_samples").get<int>() == 8);
    CHECK(j.at("seed").get<uint64_t>() == 99);
    CHECK(j.at("metrics").at("concurrence").get<double>() ==
          doctest::Approx(res.metrics.concurrence));
    CHECK(j.at("metrics").at("fidelity_phi_plus").get<double>() > 0.999);
    CHECK(j.at("intervals_68").at("concurrence").size() == 2);
    CHECK(j.at("t_params").size() == 16);
    CHECK(j.at("optimizer").contains("final_cost"));
    CHECK(j.at("rho_mle").at("re").size() == 4);
    CHECK(j.contains("rho_linear"));
    CHECK(j.at("linear_rank_warning").get<bool>() == res.linear_rank_warning);

    auto p = tmp_path("tomo.json");
    io::write_tomography_result(p, res);
    CHECK(nlohmann::json::parse(io::read_text_file(p)).at("mc_samples").get<int>() == 8);
}

TEST_CASE("spectrum csv round trip tolerates a header") {
    Spectrum s;
    s.lambda_nm = {784.5, 785.0, 785.5};
    s.value_db = {-1.25, -40.0, -0.75};
    auto p = tmp_path("spec.csv");
    io::write_spectrum_csv(p, s);
    auto back = io::read_spectrum_csv(p);
    REQUIRE(back.lambda_nm.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back.lambda_nm[i] == s.lambda_nm[i]);
        CHECK(back.value_db[i] == s.value_db[i]);
    }

    io::write_text_file(tmp_path("head.csv"), "lambda_nm,value_db\n100.0,-3.0\n");
    auto h = io::read_spectrum_csv(tmp_path("head.csv"));
    REQUIRE(h.lambda_nm.size() == 1);
    CHECK(h.value_db[0] == -3.0);
}

TEST_CASE("text file round trip") {
    auto p = tmp_path("note.txt");
    io::write_text_file(p, "line one\nline two\n");
    CHECK(io::read_text_file(p) == "line one\nline two\n");
    CHECK_THROWS_WITH_AS(io::read_text_file(tmp_path("nope.txt")), doctest::Contains("nope"),
                         std::runtime_error);
}
