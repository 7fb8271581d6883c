// Command-line front end: computes the s-invariant of knot diagrams given as
// PD codes, braid words or pretzel parameters, reporting JSON per input.
//
// Exit codes: 0 success, 1 parse error, 2 semantic error (e.g. a link
// without --allow-links), 3 oracle mismatch.

#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "khs/oracle.hpp"

using nlohmann::json;

namespace {

struct Options {
    std::string pd, braid, pretzel, batch;
    std::string field = "Q";
    bool allow_links = false;
    bool plat = false;
    bool emit_complex = false;
    bool oracle_check = false;
    int jobs = 4;
};

khs::TangleDiagram build_input(const std::string& kind, const std::string& text, bool plat) {
    if (kind == "pd") return khs::parse_pd(text);
    if (kind == "braid") return khs::parse_braid_text(text, plat);
    if (kind == "pretzel") {
        std::istringstream is(text);
        std::string tok;
        std::vector<int> v;
        while (std::getline(is, tok, ','))
            try {
                v.push_back(std::stoi(tok));
            } catch (...) {
                throw khs::ParseError("bad pretzel parameter '" + tok + "'");
            }
        if (v.size() != 3) throw khs::ParseError("pretzel input needs three integers p,q,r");
        // the knot check happens in the pipeline; construction allows links
        return khs::pretzel_diagram(v[0], v[1], v[2], true);
    }
    throw khs::ParseError("unknown input kind '" + kind + "'");
}

template <class F>
json complex_dump(const khs::Complex<F>& K) {
    json out = json::array();
    for (auto& [deg, v] : K.obj) {
        json degree;
        degree["degree"] = deg;
        degree["summands"] = json::array();
        for (auto& o : v) {
            json s;
            s["qshift"] = o.qshift;
            s["matching"] = o.match;
            degree["summands"].push_back(s);
        }
        degree["entries"] = json::array();
        if (auto it = K.diff.find(deg); it != K.diff.end())
            for (auto& [key, val] : it->second) {
                json e;
                e["from"] = key.first;
                e["to"] = key.second;
                std::string terms;
                for (auto& [mask, m] : val.terms) {
                    if (!terms.empty()) terms += " + ";
                    terms += m.str();
                    if (mask) terms += "*dots(" + std::to_string(mask) + ")";
                }
                e["value"] = terms;
                degree["entries"].push_back(e);
            }
        out.push_back(degree);
    }
    return out;
}

template <class F>
json run_one(const std::string& kind, const std::string& text, const Options& opt) {
    auto t0 = std::chrono::steady_clock::now();
    khs::TangleDiagram T = build_input(kind, text, opt.plat);
    if (!opt.allow_links && T.components() != 1)
        throw khs::SemanticError("not a knot: " + std::to_string(T.components()) +
                                 " components (use --allow-links)");
    khs::ScanResult<F> scanned = khs::scan<F>(T);
    json report;
    if (opt.emit_complex) report["complexDump"] = complex_dump(scanned.K);
    auto div = khs::filtered_divisibility<F>(std::move(scanned.K), std::move(scanned.cycle),
                                             scanned.seifert.writhe, scanned.seifert.r,
                                             &scanned.stats);
    auto t1 = std::chrono::steady_clock::now();

    if (div.sH != 2 * div.dH + div.writhe - div.seifert_circles + 1)
        throw std::logic_error("report identity violated");
    report["input"] = kind + ":" + text;
    report["field"] = F::name();
    report["s"] = div.sH;
    report["dH"] = div.dH;
    report["writhe"] = div.writhe;
    report["seifertCircles"] = div.seifert_circles;
    report["crossings"] = (int)T.crossings.size();
    report["reductionStats"] = {
        {"deloops", scanned.stats.deloops},
        {"eliminations", scanned.stats.eliminations},
        {"wallMs", std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()}};

    if (opt.oracle_check) {
        if ((int)T.crossings.size() > 8)
            throw khs::SemanticError("--oracle-check supports at most 8 crossings");
        int dh = khs::brute_d_h<F>(T);
        int s_oracle = 2 * dh + div.writhe - div.seifert_circles + 1;
        report["oracle"] = {{"dH", dh}, {"s", s_oracle}};
        if (dh != div.dH) {
            report["oracleMismatch"] = true;
            throw std::runtime_error("oracle mismatch: scan dH=" + std::to_string(div.dH) +
                                     " oracle dH=" + std::to_string(dh));
        }
    }
    return report;
}

// the prime-field modulus is fixed once in main(), before any worker starts
json run_dispatch(const std::string& kind, const std::string& text, const Options& opt) {
    if (opt.field == "Q") return run_one<khs::Rat>(kind, text, opt);
    return run_one<khs::Zp>(kind, text, opt);
}

void setup_field(const std::string& field) {
    if (field == "Q") return;
    if (field == "F2") {
        khs::Zp::set_modulus(2);
        return;
    }
    if (field.rfind("Fp:", 0) == 0) {
        khs::Zp::set_modulus(std::stoul(field.substr(3)));
        return;
    }
    throw khs::ParseError("unknown field '" + field + "' (expected Q, F2 or Fp:<p>)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rasmussen s-invariant via cobordism scanning"};
    Options opt;
    auto* pd = app.add_option("--pd", opt.pd, "PD code, e.g. \"X[1,5,2,4] X[3,1,4,6] X[5,3,6,2]\"");
    auto* braid = app.add_option("--braid", opt.braid, "braid word, e.g. \"1 1 1\"");
    auto* pretzel = app.add_option("--pretzel", opt.pretzel, "pretzel parameters p,q,r");
    auto* batch = app.add_option("--batch", opt.batch, "file with one input per line (pd:/braid:/pretzel:)");
    app.add_option("--field", opt.field, "coefficient field: Q (default), F2 or Fp:<p>");
    app.add_flag("--allow-links", opt.allow_links, "accept multi-component diagrams");
    app.add_flag("--plat", opt.plat, "plat closure for braid inputs (default: trace)");
    app.add_flag("--emit-complex", opt.emit_complex, "include the reduced complex in the report");
    app.add_flag("--oracle-check", opt.oracle_check, "cross-check with the brute-force cube (<= 8 crossings)");
    app.add_option("--jobs", opt.jobs, "batch worker count");
    pd->excludes(braid)->excludes(pretzel)->excludes(batch);
    braid->excludes(pretzel)->excludes(batch);
    pretzel->excludes(batch);
    CLI11_PARSE(app, argc, argv);

    try {
        setup_field(opt.field);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    std::vector<std::pair<std::string, std::string>> inputs;
    if (!opt.batch.empty()) {
        std::ifstream in(opt.batch);
        if (!in) {
            std::cerr << "cannot open batch file " << opt.batch << "\n";
            return 1;
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto colon = line.find(':');
            if (colon == std::string::npos) {
                std::cerr << "bad batch line: " << line << "\n";
                return 1;
            }
            inputs.push_back({line.substr(0, colon), line.substr(colon + 1)});
        }
    } else if (!opt.pd.empty()) {
        inputs.push_back({"pd", opt.pd});
    } else if (!opt.braid.empty()) {
        inputs.push_back({"braid", opt.braid});
    } else if (!opt.pretzel.empty()) {
        inputs.push_back({"pretzel", opt.pretzel});
    } else {
        std::cerr << app.help();
        return 1;
    }

    int exit_code = 0;
    std::vector<json> reports(inputs.size());
    std::vector<std::string> errors(inputs.size());
    auto work = [&](size_t i) {
        try {
            reports[i] = run_dispatch(inputs[i].first, inputs[i].second, opt);
        } catch (const khs::ParseError& e) {
            errors[i] = e.what();
            exit_code = std::max(exit_code, 1);
        } catch (const khs::SemanticError& e) {
            errors[i] = e.what();
            exit_code = std::max(exit_code, 2);
        } catch (const std::exception& e) {
            errors[i] = e.what();
            exit_code = std::max(exit_code, std::string(e.what()).find("oracle mismatch") !=
                                                    std::string::npos
                                                ? 3
                                                : 2);
        }
    };

    if (inputs.size() == 1) {
        work(0);
    } else {
        // parallel across inputs only; each complex is owned by one worker
        size_t next = 0;
        std::mutex mu;
        auto worker = [&] {
            while (true) {
                size_t i;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= inputs.size()) return;
                    i = next++;
                }
                work(i);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::max(1, opt.jobs); ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (inputs.size() == 1 && errors[0].empty()) {
        std::cout << reports[0].dump(2) << "\n";
    } else if (inputs.size() == 1) {
        json err;
        err["input"] = inputs[0].first + ":" + inputs[0].second;
        err["error"] = errors[0];
        std::cout << err.dump(2) << "\n";
    } else {
        json arr = json::array();
        for (size_t i = 0; i < inputs.size(); ++i) {
            if (errors[i].empty()) {
                arr.push_back(reports[i]);
            } else {
                json err;
                err["input"] = inputs[i].first + ":" + inputs[i].second;
                err["error"] = errors[i];
                arr.push_back(err);
            }
        }
        std::cout << arr.dump(2) << "\n";
    }
    return exit_code;
}
