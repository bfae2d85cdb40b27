#include "tbe/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tbe::io {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream f(path, binary ? (std::ios::out | std::ios::binary) : std::ios::out);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream f(path, binary ? (std::ios::in | std::ios::binary) : std::ios::in);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return f;
}

json parse_json(const std::string& text, const char* who) {
    try {
        return json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string(who) + ": " + e.what());
    }
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json mat_to_obj(const Mat4& m) {
    json re = json::array(), im = json::array();
    for (int r = 0; r < 4; ++r) {
        json rr = json::array(), ri = json::array();
        for (int c = 0; c < 4; ++c) {
            rr.push_back(m(r, c).real());
            ri.push_back(m(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ri);
    }
    return json{{"re", re}, {"im", im}};
}

Mat4 mat_from_obj(const json& j, const char* who) {
    if (!j.is_object() || !j.contains("re") || !j.contains("im"))
        throw std::invalid_argument(std::string(who) + ": expected {\"re\", \"im\"}");
    Mat4 m;
    for (const char* part : {"re", "im"}) {
        const json& block = j.at(part);
        if (!block.is_array() || block.size() != 4)
            throw std::invalid_argument(std::string(who) + ": " + part + " must be 4 rows");
        for (int r = 0; r < 4; ++r) {
            const json& row = block[size_t(r)];
            if (!row.is_array() || row.size() != 4)
                throw std::invalid_argument(std::string(who) + ": " + part +
                                            " rows must have 4 entries");
            for (int c = 0; c < 4; ++c) {
                if (!row[size_t(c)].is_number())
                    throw std::invalid_argument(std::string(who) + ": non-numeric entry");
                double v = row[size_t(c)].get<double>();
                if (part[0] == 'r')
                    m(r, c) += Cplx(v, 0);
                else
                    m(r, c) += Cplx(0, v);
            }
        }
    }
    return m;
}

}  // namespace

std::string matrix_to_json(const Mat4& m, int indent) { return mat_to_obj(m).dump(indent); }

Mat4 matrix_from_json(const std::string& text) {
    return mat_from_obj(parse_json(text, "matrix"), "matrix");
}

void write_matrix(const std::string& path, const Mat4& m) {
    open_out(path) << matrix_to_json(m) << "\n";
}

Mat4 read_matrix(const std::string& path) { return matrix_from_json(read_text_file(path)); }

// ---- time-tag streams ----

namespace {

constexpr char kMagic[8] = {'T', 'B', 'T', 'A', 'G', 'S', 'T', 'R'};
constexpr uint32_t kStreamVersion = 1;

void put_u32(std::string& s, uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& s, uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

uint64_t get_u64(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

void write_stream_bin(const std::string& path, const std::vector<TimeTagEvent>& ev) {
    std::string buf;
    buf.reserve(16 + ev.size() * 9);
    buf.append(kMagic, 8);
    put_u32(buf, kStreamVersion);
    put_u32(buf, 0);
    for (const auto& e : ev) {
        buf.push_back(char(uint8_t(e.channel)));
        put_u64(buf, e.timestamp_ps);
    }
    auto f = open_out(path, true);
    f.write(buf.data(), std::streamsize(buf.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<TimeTagEvent> read_stream_bin(const std::string& path) {
    auto f = open_in(path, true);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 16 || buf.compare(0, 8, kMagic, 8) != 0)
        throw std::invalid_argument("time-tag stream: bad magic in " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    if (get_u32(p + 8) != kStreamVersion)
        throw std::invalid_argument("time-tag stream: unsupported version in " + path);
    size_t body = buf.size() - 16;
    if (body % 9 != 0)
        throw std::invalid_argument("time-tag stream: truncated record in " + path);
    std::vector<TimeTagEvent> ev(body / 9);
    for (size_t i = 0; i < ev.size(); ++i) {
        const unsigned char* rec = p + 16 + i * 9;
        if (rec[0] > 2)
            throw std::invalid_argument("time-tag stream: bad channel byte in " + path);
        ev[i].channel = Channel(rec[0]);
        ev[i].timestamp_ps = get_u64(rec + 1);
    }
    return ev;
}

void write_stream_csv(const std::string& path, const std::vector<TimeTagEvent>& ev) {
    auto f = open_out(path);
    f << "channel,timestamp_ps\n";
    for (const auto& e : ev) f << int(e.channel) << ',' << e.timestamp_ps << '\n';
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<TimeTagEvent> read_stream_csv(const std::string& path) {
    auto f = open_in(path);
    std::vector<TimeTagEvent> ev;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        unsigned ch;
        unsigned long long ts;
        if (std::sscanf(line.c_str(), "%u,%llu", &ch, &ts) != 2) {
            if (first) {
                first = false;  // tolerated header line
                continue;
            }
            throw std::invalid_argument("time-tag CSV: malformed line in " + path);
        }
        first = false;
        if (ch > 2) throw std::invalid_argument("time-tag CSV: bad channel in " + path);
        ev.push_back({Channel(uint8_t(ch)), uint64_t(ts)});
    }
    return ev;
}

std::vector<TimeTagEvent> read_stream(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0)
        return read_stream_bin(path);
    return read_stream_csv(path);
}

// ---- histogram CSV ----

void write_histogram_csv(const std::string& path, const CoincidenceHistogram2D& h) {
    auto f = open_out(path);
    f << "bin_width_ps,origin_ps,nx,ny,integration_time_s\n";
    f << fmt_g(h.bin_width * 1e12) << ',' << fmt_g(h.origin * 1e12) << ',' << h.nx << ',' << h.ny
      << ',' << fmt_g(h.integration_time) << '\n';
    for (int ix = 0; ix < h.nx; ++ix) {
        for (int iy = 0; iy < h.ny; ++iy) f << (iy ? "," : "") << h.at(ix, iy);
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

CoincidenceHistogram2D read_histogram_csv(const std::string& path) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("bin_width_ps", 0) != 0)
        throw std::invalid_argument("histogram CSV: missing header in " + path);
    if (!std::getline(f, line))
        throw std::invalid_argument("histogram CSV: missing geometry line in " + path);
    CoincidenceHistogram2D h;
    double bw_ps, or_ps, it_s;
    if (std::sscanf(line.c_str(), "%lf,%lf,%d,%d,%lf", &bw_ps, &or_ps, &h.nx, &h.ny, &it_s) != 5 ||
        h.nx <= 0 || h.ny <= 0)
        throw std::invalid_argument("histogram CSV: bad geometry line in " + path);
    h.bin_width = bw_ps * 1e-12;
    h.origin = or_ps * 1e-12;
    h.integration_time = it_s;
    h.counts.assign(size_t(h.nx) * size_t(h.ny), 0);
    for (int ix = 0; ix < h.nx; ++ix) {
        if (!std::getline(f, line))
            throw std::invalid_argument("histogram CSV: missing counts row in " + path);
        std::stringstream ss(line);
        std::string cell;
        for (int iy = 0; iy < h.ny; ++iy) {
            if (!std::getline(ss, cell, ','))
                throw std::invalid_argument("histogram CSV: short counts row in " + path);
            h.at(ix, iy) = std::stoll(cell);
        }
    }
    return h;
}

// ---- mode field CSV ----

void write_modefield_csv(const std::string& path, const ModeField& f) {
    auto o = open_out(path);
    o << "nx,ny,dx_um,dy_um\n";
    o << f.nx << ',' << f.ny << ',' << fmt_g(f.dx) << ',' << fmt_g(f.dy) << '\n';
    for (int ix = 0; ix < f.nx; ++ix)
        for (int iy = 0; iy < f.ny; ++iy) {
            Cplx v = f.at(ix, iy);
            o << fmt_g(v.real()) << ',' << fmt_g(v.imag()) << '\n';
        }
    if (!o) throw std::runtime_error("write failed: " + path);
}

ModeField read_modefield_csv(const std::string& path) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("nx,ny", 0) != 0)
        throw std::invalid_argument("mode-field CSV: missing header in " + path);
    if (!std::getline(f, line))
        throw std::invalid_argument("mode-field CSV: missing geometry line in " + path);
    ModeField m;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &m.nx, &m.ny, &m.dx, &m.dy) != 4 || m.nx <= 0 ||
        m.ny <= 0 || !(m.dx > 0) || !(m.dy > 0))
        throw std::invalid_argument("mode-field CSV: bad geometry line in " + path);
    m.amps.resize(size_t(m.nx) * size_t(m.ny));
    for (auto& a : m.amps) {
        if (!std::getline(f, line))
            throw std::invalid_argument("mode-field CSV: missing amplitude row in " + path);
        double re, im;
        if (std::sscanf(line.c_str(), "%lf,%lf", &re, &im) != 2)
            throw std::invalid_argument("mode-field CSV: malformed amplitude row in " + path);
        a = Cplx(re, im);
    }
    return m;
}

// ---- projection records ----

std::string records_to_json(const ProjectionRecords& records) {
    json arr = json::array();
    for (const auto& r : records) {
        json re = json::array(), im = json::array();
        for (int i = 0; i < 4; ++i) {
            re.push_back(r.projector.a[size_t(i)].real());
            im.push_back(r.projector.a[size_t(i)].imag());
        }
        arr.push_back(json{{"projector_re", re},
                           {"projector_im", im},
                           {"count", r.count},
                           {"setting", setting_name(r.setting)},
                           {"peak", r.peak},
                           {"cell_ta", r.cell_ta},
                           {"cell_tb", r.cell_tb},
                           {"weight", r.weight}});
    }
    return arr.dump(1);
}

ProjectionRecords records_from_json(const std::string& text) {
    json arr = parse_json(text, "records");
    if (!arr.is_array()) throw std::invalid_argument("records: expected a JSON array");
    ProjectionRecords out;
    for (const auto& j : arr) {
        ProjectionRecord r;
        const json& re = j.at("projector_re");
        const json& im = j.at("projector_im");
        if (!re.is_array() || re.size() != 4 || !im.is_array() || im.size() != 4)
            throw std::invalid_argument("records: projector arrays must have 4 entries");
        for (int i = 0; i < 4; ++i)
            r.projector.a[size_t(i)] =
                Cplx(re[size_t(i)].get<double>(), im[size_t(i)].get<double>());
        r.count = j.at("count").get<int64_t>();
        auto s = setting_from_name(j.at("setting").get<std::string>());
        if (!s)
            throw std::invalid_argument("records: unknown setting " +
                                        j.at("setting").get<std::string>());
        r.setting = *s;
        r.peak = j.at("peak").get<int>();
        r.cell_ta = j.at("cell_ta").get<int>();
        r.cell_tb = j.at("cell_tb").get<int>();
        r.weight = j.at("weight").get<double>();
        out.push_back(r);
    }
    return out;
}

void write_records(const std::string& path, const ProjectionRecords& records) {
    open_out(path) << records_to_json(records) << "\n";
}

ProjectionRecords read_records(const std::string& path) {
    return records_from_json(read_text_file(path));
}

// ---- experiment config ----

std::string config_to_json(const ExperimentConfig& c) {
    json j{{"rep_rate", c.rep_rate},
           {"bin_delay", c.bin_delay},
           {"pair_prob", c.pair_prob},
           {"pump_phase", c.pump_phase},
           {"alice_phase", c.alice_phase},
           {"bob_phase", c.bob_phase},
           {"visibility", c.visibility},
           {"detector_jitter_sigma", c.detector_jitter_sigma},
           {"tagger_jitter_rms", c.tagger_jitter_rms},
           {"dead_time", c.dead_time},
           {"det_efficiency_alice", c.det_efficiency_alice},
           {"det_efficiency_bob", c.det_efficiency_bob},
           {"transmission_alice", c.transmission_alice},
           {"transmission_bob", c.transmission_bob},
           {"background_rate", c.background_rate},
           {"integration_time", c.integration_time},
           {"rng_seed", c.rng_seed},
           {"trigger_decimation", c.trigger_decimation},
           {"gated_triggers", c.gated_triggers},
           {"fold_pump_phase", c.fold_pump_phase},
           {"double_pairs", c.double_pairs}};
    return j.dump(1);
}

ExperimentConfig config_from_json(const std::string& text) {
    json j = parse_json(text, "config");
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    ExperimentConfig c;
    auto num = [&](const char* name, double& dst) {
        if (!j.contains(name)) throw std::invalid_argument(std::string("config: missing field: ") + name);
        if (!j.at(name).is_number())
            throw std::invalid_argument(std::string("config: non-numeric field: ") + name);
        dst = j.at(name).get<double>();
    };
    auto flag = [&](const char* name, bool& dst) {
        if (!j.contains(name)) throw std::invalid_argument(std::string("config: missing field: ") + name);
        if (!j.at(name).is_boolean())
            throw std::invalid_argument(std::string("config: non-boolean field: ") + name);
        dst = j.at(name).get<bool>();
    };
    num("rep_rate", c.rep_rate);
    num("bin_delay", c.bin_delay);
    num("pair_prob", c.pair_prob);
    num("pump_phase", c.pump_phase);
    num("alice_phase", c.alice_phase);
    num("bob_phase", c.bob_phase);
    num("visibility", c.visibility);
    num("detector_jitter_sigma", c.detector_jitter_sigma);
    num("tagger_jitter_rms", c.tagger_jitter_rms);
    num("dead_time", c.dead_time);
    num("det_efficiency_alice", c.det_efficiency_alice);
    num("det_efficiency_bob", c.det_efficiency_bob);
    num("transmission_alice", c.transmission_alice);
    num("transmission_bob", c.transmission_bob);
    num("background_rate", c.background_rate);
    num("integration_time", c.integration_time);
    if (!j.contains("rng_seed") || !j.at("rng_seed").is_number_unsigned())
        throw std::invalid_argument("config: missing or non-unsigned field: rng_seed");
    c.rng_seed = j.at("rng_seed").get<uint64_t>();
    if (!j.contains("trigger_decimation") || !j.at("trigger_decimation").is_number_integer())
        throw std::invalid_argument("config: missing or non-integer field: trigger_decimation");
    c.trigger_decimation = j.at("trigger_decimation").get<int>();
    flag("gated_triggers", c.gated_triggers);
    flag("fold_pump_phase", c.fold_pump_phase);
    flag("double_pairs", c.double_pairs);
    static const char* known[] = {
        "rep_rate",        "bin_delay",           "pair_prob",        "pump_phase",
        "alice_phase",     "bob_phase",           "visibility",       "detector_jitter_sigma",
        "tagger_jitter_rms", "dead_time",         "det_efficiency_alice", "det_efficiency_bob",
        "transmission_alice", "transmission_bob", "background_rate",  "integration_time",
        "rng_seed",        "trigger_decimation",  "gated_triggers",   "fold_pump_phase",
        "double_pairs"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw std::invalid_argument("config: unknown field: " + it.key());
    }
    c.validate();
    return c;
}

ExperimentConfig read_config(const std::string& path) {
    return config_from_json(read_text_file(path));
}

void write_config(const std::string& path, const ExperimentConfig& cfg) {
    open_out(path) << config_to_json(cfg) << "\n";
}

// ---- tomography result ----

std::string tomography_result_to_json(const TomographyResult& r) {
    json iv{{"concurrence", {r.concurrence_iv.lower, r.concurrence_iv.upper}},
            {"fidelity_phi_plus", {r.fidelity_iv.lower, r.fidelity_iv.upper}},
            {"chsh_s", {r.chsh_iv.lower, r.chsh_iv.upper}},
            {"purity", {r.purity_iv.lower, r.purity_iv.upper}}};
    json j{{"rho_mle", mat_to_obj(r.rho_mle.m)},
           {"rho_linear", mat_to_obj(r.rho_linear)},
           {"linear_rank_warning", r.linear_rank_warning},
           {"metrics",
            {{"concurrence", r.metrics.concurrence},
             {"fidelity_phi_plus", r.metrics.fidelity_phi_plus},
             {"chsh_s", r.metrics.chsh_s},
             {"purity", r.metrics.purity}}},
           {"intervals_68", iv},
           {"mc_samples", r.mc_samples},
           {"seed", r.seed},
           {"optimizer",
            {{"iterations", r.optimizer.iterations},
             {"final_cost", r.optimizer.final_cost},
             {"converged", r.optimizer.converged}}},
           {"t_params", r.t_params}};
    if (!r.mc_concurrence.empty())
        j["samples"] = json{{"concurrence", r.mc_concurrence},
                            {"fidelity_phi_plus", r.mc_fidelity},
                            {"chsh_s", r.mc_chsh},
                            {"purity", r.mc_purity}};
    return j.dump(1);
}

void write_tomography_result(const std::string& path, const TomographyResult& r) {
    open_out(path) << tomography_result_to_json(r) << "\n";
}

// ---- spectra ----

Spectrum read_spectrum_csv(const std::string& path) {
    auto f = open_in(path);
    Spectrum s;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        double lam, v;
        if (std::sscanf(line.c_str(), "%lf,%lf", &lam, &v) != 2) {
            if (first) {
                first = false;
                continue;
            }
            throw std::invalid_argument("spectrum CSV: malformed line in " + path);
        }
        first = false;
        s.lambda_nm.push_back(lam);
        s.value_db.push_back(v);
    }
    return s;
}

void write_spectrum_csv(const std::string& path, const Spectrum& s) {
    if (s.lambda_nm.size() != s.value_db.size())
        throw std::invalid_argument("spectrum CSV: wavelength/value size mismatch");
    auto f = open_out(path);
    f << "lambda_nm,value_db\n";
    for (size_t i = 0; i < s.lambda_nm.size(); ++i)
        f << fmt_g(s.lambda_nm[i]) << ',' << fmt_g(s.value_db[i]) << '\n';
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    auto f = open_in(path, true);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& text) {
    auto f = open_out(path, true);
    f.write(text.data(), std::streamsize(text.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace tbe::io
