#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "densecode/coarse.hpp"
#include "densecode/construction.hpp"

using namespace densecode;
using nlohmann::json;

namespace {

struct Options {
    std::string schedule = "paper";
    std::uint64_t seed = 1;
    std::uint64_t samples = 1000;
    std::string out;
};

std::string rat(const Rational& q) { return q.get_num().get_str() + "/" + q.get_den().get_str(); }

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

// "paper", or a JSON file holding [[n, b], ...] or {"rows": [[n, b], ...]}
LayoutSchedule load_schedule(const std::string& src) {
    if (src == "paper") return LayoutSchedule::paper();
    json j = read_json(src);
    const json& rows = j.is_object() ? j.at("rows") : j;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> nb;
    for (auto& r : rows) nb.emplace_back(r.at(0).get<std::uint64_t>(), r.at(1).get<std::uint64_t>());
    return LayoutSchedule::explicit_rows(nb);
}

// Output goes to --out when given, stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot write " + path);
        }
    }
    std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::string join(const PartialSeq& f) {
    std::string s;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) s += ' ';
        s += f[i] ? std::to_string(*f[i]) : "_";
    }
    return s;
}

unsigned max_n(const LayoutSchedule& sched, std::uint64_t rows) {
    unsigned n = 0;
    for (std::uint64_t i = 0; i < rows; ++i) n = std::max<unsigned>(n, static_cast<unsigned>(sched.row(i).n));
    return n;
}

int cmd_roundtrip(const Options& o, std::uint64_t values, bool corrupt) {
    const LayoutSchedule sched = load_schedule(o.schedule);
    unsigned nmax = 1;
    std::vector<std::uint64_t> rows;
    if (sched.is_paper()) {
        rows = rows_for_values(sched, nmax, values - 1);
    } else {
        for (std::uint64_t i = 0; i < *sched.row_count(); ++i) rows.push_back(i);
        nmax = max_n(sched, *sched.row_count());
    }
    std::mt19937_64 rng(o.seed);
    Sink sink(o.out);
    sink.os() << "sample,f,decoded,ok\n";
    int status = 0;
    for (std::uint64_t k = 0; k < o.samples; ++k) {
        PartialSeq f(std::size_t{2} << nmax);
        f[0] = 0;
        for (std::size_t x = 1; x < f.size(); ++x) f[x] = uniform_below(rng, values);
        GammaImage img = gamma_rows(f, sched, rows);
        PartialSeq back = gamma_hat_prefix(img.X, nmax);
        if (corrupt && k == 0) back[1] = *back[1] + 1;
        const bool ok = back == f;
        sink.os() << k << ',' << join(f) << ',' << join(back) << ',' << (ok ? 1 : 0) << '\n';
        if (!ok) {
            std::cerr << "round trip mismatch at sample " << k << ": " << join(f) << " -> " << join(back) << '\n';
            status = 1;
        }
    }
    return status;
}

int cmd_perturb(const Options& o, std::uint64_t rows, std::uint64_t values, bool empty_s) {
    const LayoutSchedule sched = load_schedule(o.schedule);
    if (auto c = sched.row_count()) rows = std::min(rows, *c);
    const std::size_t len = std::size_t{2} << max_n(sched, rows);
    std::mt19937_64 rng(o.seed);
    Sink sink(o.out);
    sink.os() << "row,n_i,s_i,interval_fraction,code_fraction,window_density_num,window_density_den,bound_holds\n";
    int status = 0;
    for (std::uint64_t k = 0; k < o.samples; ++k) {
        PartialSeq f(len);
        f[0] = 0;
        for (std::size_t x = 1; x < len; ++x) f[x] = uniform_below(rng, values);
        FiniteBitSet S(len);
        if (!empty_s)
            for (std::size_t x = 1; x < len; ++x)
                if (rng() & 1) S.set(x);
        PartialSeq g = perturb_values(f, S, values, rng);
        for (auto& r : perturb_experiment(f, g, S, sched, rows)) {
            sink.os() << r.row << ',' << r.n << ',' << r.s << ',' << rat(r.interval_fraction) << ','
                      << rat(r.code_fraction) << ',' << r.window_density.get_num().get_str() << ','
                      << r.window_density.get_den().get_str() << ',' << (r.bound_holds ? 1 : 0) << '\n';
            if (!r.bound_holds) status = 1;
        }
    }
    return status;
}

int cmd_construct(const Options& o, std::uint64_t stages, const std::string& pi_file, const std::string& adv_file,
                  const std::string& lsched, bool serial, const std::string& summary_file) {
    if (stages == 0) throw std::invalid_argument("--stages must be positive");
    PiSeq pi;
    if (pi_file.empty()) {
        pi = PiSeq::length_lex(stages);
    } else {
        std::vector<FiniteBitSet> p;
        for (auto& s : read_json(pi_file)) p.push_back(bits_from_string(s.get<std::string>()));
        pi = normalize_pi(p);
        if (pi.size() < stages) throw std::invalid_argument("pi has fewer entries than --stages");
    }
    FunctionalRegistry reg =
        adv_file.empty() ? FunctionalRegistry::default_adversary() : FunctionalRegistry::from_json(read_json(adv_file));
    LSchedule ls = LSchedule::standard();
    if (lsched.rfind("slow:", 0) == 0)
        ls = LSchedule::slow(std::stoull(lsched.substr(5)));
    else if (lsched != "standard")
        throw std::invalid_argument("unknown l-schedule " + lsched);

    ConstructionConfig cfg;
    cfg.parallel = !serial;
    Sink sink(o.out);
    auto& os = sink.os();
    RunReport rep = run(pi, reg, ls, stages, [&](const TraceRecord& r) { os << r.to_json().dump() << '\n'; }, cfg);
    os.flush();
    if (summary_file.empty()) {
        std::cerr << rep.summary.dump(2) << '\n';
    } else {
        std::ofstream(summary_file) << rep.summary.dump(2) << '\n';
    }
    return rep.ok ? 0 : 1;
}

Theta theta_from_json(const json& j) {
    Theta t(j.at("arity").get<std::size_t>());
    std::vector<std::pair<std::uint64_t, std::uint64_t>> sup;
    for (auto& e : j.at("support")) sup.emplace_back(e.at(0).get<std::uint64_t>(), e.at(1).get<std::uint64_t>());
    std::sort(sup.begin(), sup.end());
    for (auto& [s, m] : sup)
        if (m) t.set(s, m);
    return t;
}

json theta_to_json(const Theta& t) {
    json sup = json::array();
    for (auto& [s, m] : t.support()) sup.push_back({s, m});
    return {{"arity", t.arity()}, {"support", sup}};
}

int cmd_decode(const Options& o, const std::string& file, bool serial) {
    Theta t = theta_from_json(read_json(file));
    DecodeResult r = serial ? decode_serial(t) : decode_parallel(t);
    Sink sink(o.out);
    sink.os() << json(r.sigma).dump() << '\n';
    std::cerr << json{{"distance", r.distance}, {"height", r.height}}.dump() << '\n';
    return 0;
}

int cmd_encode(const Options& o, const std::vector<std::uint64_t>& sigma) {
    Sink sink(o.out);
    sink.os() << theta_to_json(encode(sigma)).dump() << '\n';
    return 0;
}

int cmd_layout(const Options& o, std::uint64_t rows) {
    const LayoutSchedule sched = load_schedule(o.schedule);
    if (auto c = sched.row_count()) rows = std::min(rows, *c);
    Sink sink(o.out);
    auto num = [](const std::optional<mpz_class>& v) -> json {
        if (!v) return nullptr;
        if (mpz_sizeinbase(v->get_mpz_t(), 2) <= 256) return v->get_str();
        return "2^" + std::to_string(mpz_sizeinbase(v->get_mpz_t(), 2) - 1) + "+";
    };
    for (std::uint64_t i = 0; i < rows; ++i) {
        RowGeometry g = sched.geometry(i);
        sink.os() << json{{"i", g.i},          {"n", g.n},          {"s", g.s},
                          {"b", g.b},          {"l_prev", num(g.lprev)}, {"r", num(g.r)},
                          {"l_minus", num(g.lminus)}, {"l", num(g.l)}}
                         .dump()
                  << '\n';
        if (!g.representable()) break;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"densecode: density codes, coarse functionals and the injury construction"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sc) {
        sc->add_option("--schedule", o.schedule, "paper, or a JSON file of [n, b] rows");
        sc->add_option("--seed", o.seed, "PRNG seed (mt19937_64)");
        sc->add_option("--samples", o.samples, "number of random samples");
        sc->add_option("--out", o.out, "output path (default stdout)");
    };

    std::uint64_t values = 4, rows = 2, stages = 200;
    bool corrupt = false, empty_s = false, serial = false;
    std::string pi_file, adv_file, lsched = "standard", summary_file, theta_file;
    std::vector<std::uint64_t> sigma;

    auto* rt = app.add_subcommand("roundtrip", "Gamma-hat after Gamma on random f");
    common(rt);
    rt->add_option("--values", values, "f values are drawn from [0, V)")->check(CLI::Range(1, 16));
    rt->add_flag("--corrupt", corrupt)->group("");

    auto* pt = app.add_subcommand("perturb", "perturbation experiment over rows");
    common(pt);
    pt->add_option("--rows", rows, "rows to lay out");
    pt->add_option("--values", values, "value range")->check(CLI::Range(1, 1 << 20));
    pt->add_flag("--empty-s", empty_s, "perturb on the empty set");

    auto* ct = app.add_subcommand("construct", "run the injury construction");
    common(ct);
    ct->add_option("--stages", stages, "number of stages");
    ct->add_option("--pi", pi_file, "JSON array of strings, normalized before use");
    ct->add_option("--adversary", adv_file, "JSON program registry");
    ct->add_option("--l-schedule", lsched, "standard or slow:N");
    ct->add_option("--summary", summary_file, "invariant summary path (default stderr)");
    ct->add_flag("--serial", serial, "serial viability search");

    auto* dc = app.add_subcommand("decode", "decode a code family");
    common(dc);
    dc->add_option("theta", theta_file, "JSON {arity, support: [[s, mask], ...]}")->required();
    dc->add_flag("--serial", serial, "serial candidate search");

    auto* ec = app.add_subcommand("encode", "encode a tuple");
    common(ec);
    ec->add_option("sigma", sigma, "tuple entries")->required();

    auto* lt = app.add_subcommand("layout", "row geometry");
    common(lt);
    lt->add_option("--rows", rows, "rows to print");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*rt) return cmd_roundtrip(o, values, corrupt);
        if (*pt) return cmd_perturb(o, rows, values, empty_s);
        if (*ct) return cmd_construct(o, stages, pi_file, adv_file, lsched, serial, summary_file);
        if (*dc) return cmd_decode(o, theta_file, serial);
        if (*ec) return cmd_encode(o, sigma);
        if (*lt) return cmd_layout(o, rows);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
