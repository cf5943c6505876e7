#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psimc/errors.hpp"
#include "psimc/limits.hpp"
#include "psimc/logic.hpp"
#include "psimc/measures.hpp"
#include "psimc/privacy.hpp"
#include "psimc/protocols.hpp"
#include "psimc/transcript.hpp"

namespace {

namespace logic = psimc::logic;
namespace measures = psimc::measures;
namespace net = psimc::net;
namespace smpc = psimc::smpc;
namespace privacy = psimc::privacy;
namespace limits = psimc::limits;
using nlohmann::json;

struct Caps {
    std::size_t max_atoms = limits::kDefaultMaxAtoms;
    std::size_t contension_atoms = limits::kDefaultContensionAtoms;
};

Caps effective_caps() {
    Caps caps;
    if (const char* env = std::getenv("PSIMC_MAX_ATOMS")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0' || v == 0)
            throw psimc::InputError("PSIMC_MAX_ATOMS must be a positive integer");
        caps.max_atoms = static_cast<std::size_t>(v);
        caps.contension_atoms = static_cast<std::size_t>(v);
    }
    return caps;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw psimc::InputError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

logic::KnowledgeBase load_kb(const std::string& path) {
    try {
        return logic::parse_kb(read_file(path));
    } catch (const psimc::ParseError& e) {
        throw psimc::ParseError(path + ": " + e.what(), e.offset, e.line);
    }
}

logic::Signature parse_signature_csv(const std::string& text) {
    std::vector<std::string> atoms;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        auto first = item.find_first_not_of(" \t");
        auto last = item.find_last_not_of(" \t");
        if (first == std::string::npos)
            throw psimc::InputError("empty atom in signature list '" + text + "'");
        atoms.push_back(item.substr(first, last - first + 1));
    }
    if (atoms.empty()) throw psimc::InputError("empty signature list");
    return logic::Signature(atoms);
}

logic::Signature union_signature(const logic::KnowledgeBase& a,
                                 const logic::KnowledgeBase* b) {
    std::vector<std::string> atoms = logic::atoms_of(a).atoms();
    if (b) {
        auto more = logic::atoms_of(*b).atoms();
        atoms.insert(atoms.end(), more.begin(), more.end());
    }
    return logic::Signature(atoms);
}

void emit_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// --- oracle -------------------------------------------------------------------

struct OracleOpts {
    std::string kb_a;
    std::string kb_b;
    std::string signature;
    bool json_out = false;
};

json kb_report(const logic::KnowledgeBase& kb, const logic::Signature& sig,
               const Caps& caps) {
    auto mods = logic::models(kb, sig, caps.max_atoms);
    return {{"formulas", kb.size()},
            {"models", mods.size()},
            {"drastic", measures::drastic(kb, sig, caps.max_atoms)},
            {"contension", measures::contension(kb, sig, caps.contension_atoms)}};
}

void print_kb_line(const char* name, const json& r) {
    std::cout << name << ": formulas=" << r.at("formulas") << " models=" << r.at("models")
              << " drastic=" << r.at("drastic") << " contension=" << r.at("contension")
              << "\n";
}

int cmd_oracle(const OracleOpts& o) {
    Caps caps = effective_caps();
    logic::KnowledgeBase kb_a = load_kb(o.kb_a);
    std::optional<logic::KnowledgeBase> kb_b;
    if (!o.kb_b.empty()) kb_b = load_kb(o.kb_b);

    logic::Signature sig = o.signature.empty()
                               ? union_signature(kb_a, kb_b ? &*kb_b : nullptr)
                               : parse_signature_csv(o.signature);

    json out{{"v", 1}, {"signature", sig.atoms()}};
    out["kb_a"] = kb_report(kb_a, sig, caps);
    json union_report;
    if (kb_b) {
        out["kb_b"] = kb_report(*kb_b, sig, caps);
        union_report = kb_report(logic::kb_union(kb_a, *kb_b), sig, caps);
        auto ma = logic::models(kb_a, sig, caps.max_atoms);
        auto mb = logic::models(*kb_b, sig, caps.max_atoms);
        if (!ma.empty() && !mb.empty())
            out["min_mismatch"] = measures::min_mismatch_oracle(ma, mb);
        else
            out["min_mismatch"] = nullptr;
    } else {
        out["kb_b"] = nullptr;
        union_report = out["kb_a"];
        out["min_mismatch"] = nullptr;
    }
    out["union"] = union_report;

    if (o.json_out) {
        emit_json(out);
        return 0;
    }
    std::cout << "signature:";
    for (const auto& a : sig.atoms()) std::cout << " " << a;
    std::cout << "\n";
    print_kb_line("kb_a", out.at("kb_a"));
    if (kb_b) print_kb_line("kb_b", out.at("kb_b"));
    print_kb_line("union", out.at("union"));
    if (!out.at("min_mismatch").is_null())
        std::cout << "min_mismatch: " << out.at("min_mismatch") << "\n";
    return 0;
}

// --- measure --------------------------------------------------------------------

struct MeasureOpts {
    std::string protocol;
    std::string transport = "memory";
    std::string kb_a;
    std::string kb_b;
    std::string signature;
    std::string listen;
    std::string connect;
    std::string role_text;
    std::string transcript_out;
    std::string port_file;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::uint64_t timeout_ms = 30000;
    bool symmetric = false;
    bool json_out = false;
};

struct Inputs {
    logic::Interpretation w;
    logic::KnowledgeBase kb;
    std::vector<logic::Interpretation> ms;
    std::uint64_t value = 0;
};

bool known_protocol(const std::string& p) {
    return p == smpc::proto::kAlg1 || p == smpc::proto::kAlg2 || p == smpc::proto::kAlg3 ||
           p == smpc::proto::kAlg4 || p == smpc::proto::kPsi;
}

Inputs derive_inputs(const std::string& protocol, const logic::KnowledgeBase& kb,
                     const logic::Signature& sig, const Caps& caps) {
    Inputs in;
    if (protocol == smpc::proto::kAlg1) {
        in.w = logic::cwa_interpretation(kb, sig, caps.max_atoms);
    } else if (protocol == smpc::proto::kAlg2) {
        in.kb = kb;
    } else if (protocol == smpc::proto::kAlg3 || protocol == smpc::proto::kAlg4) {
        in.ms = logic::models(kb, sig, caps.max_atoms);
        if (in.ms.empty())
            throw psimc::InputError(
                "own knowledge base has no models; refusing to run " + protocol);
    } else if (protocol == smpc::proto::kPsi) {
        in.value = logic::cwa_interpretation(kb, sig, caps.max_atoms).to_index();
    }
    return in;
}

smpc::ProtocolOutcome run_protocol(net::Channel& ch, net::Role role,
                                   const smpc::SessionConfig& cfg,
                                   const std::string& protocol, const Inputs& in) {
    if (protocol == smpc::proto::kAlg1) return smpc::run_alg1(ch, role, cfg, in.w);
    if (protocol == smpc::proto::kAlg2) return smpc::run_alg2(ch, role, cfg, in.kb);
    if (protocol == smpc::proto::kAlg3) return smpc::run_alg3(ch, role, cfg, in.ms);
    if (protocol == smpc::proto::kAlg4) return smpc::run_alg4(ch, role, cfg, in.ms);
    return smpc::run_psi_singleton(ch, role, cfg, in.value);
}

void append_transcripts(json& arr, const smpc::ProtocolOutcome& out) {
    if (out.transcript) arr.push_back(out.transcript->to_json());
    if (out.symmetric_transcript) arr.push_back(out.symmetric_transcript->to_json());
}

void write_transcripts(const std::string& path, const json& arr) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw psimc::InputError("cannot write '" + path + "'");
    out << json{{"v", 1}, {"transcripts", arr}}.dump(2) << "\n";
}

json result_json(const std::optional<std::uint64_t>& r) {
    if (r) return *r;
    return nullptr;
}

int cmd_measure(const MeasureOpts& o) {
    Caps caps = effective_caps();
    if (!known_protocol(o.protocol))
        throw psimc::ConfigError("unknown protocol '" + o.protocol + "'");
    if (o.json_out && !o.seed_given)
        throw psimc::InputError("--seed is required with --json so runs are reproducible");

    smpc::SessionConfig cfg;
    cfg.seed = o.seed;
    cfg.symmetric = o.symmetric;
    cfg.max_atoms = caps.max_atoms;
    cfg.recv_timeout = std::chrono::milliseconds(o.timeout_ms);

    if (o.transport == "memory") {
        if (o.kb_a.empty() || o.kb_b.empty())
            throw psimc::InputError("memory transport needs --kb-a and --kb-b");
        logic::KnowledgeBase kb_a = load_kb(o.kb_a);
        logic::KnowledgeBase kb_b = load_kb(o.kb_b);
        cfg.signature = o.signature.empty() ? union_signature(kb_a, &kb_b)
                                            : parse_signature_csv(o.signature);
        Inputs in_a = derive_inputs(o.protocol, kb_a, cfg.signature, caps);
        Inputs in_b = derive_inputs(o.protocol, kb_b, cfg.signature, caps);
        smpc::PairOutcome pair = smpc::run_pair_memory([&](net::Channel& ch, net::Role r) {
            return run_protocol(ch, r, cfg, o.protocol,
                                r == net::Role::A ? in_a : in_b);
        });

        if (!o.transcript_out.empty()) {
            json arr = json::array();
            append_transcripts(arr, pair.a);
            append_transcripts(arr, pair.b);
            write_transcripts(o.transcript_out, arr);
        }
        if (o.json_out) {
            emit_json({{"v", 1},
                       {"protocol", o.protocol},
                       {"transport", "memory"},
                       {"seed", o.seed},
                       {"symmetric", o.symmetric},
                       {"result", result_json(pair.a.result)},
                       {"result_b", result_json(pair.b.result)},
                       {"session_id", pair.a.transcript->session_id},
                       {"counters_a", pair.a.counters.to_json()},
                       {"counters_b", pair.b.counters.to_json()}});
            return 0;
        }
        std::cout << "protocol: " << o.protocol << "\n";
        std::cout << "result: " << result_json(pair.a.result).dump() << "\n";
        if (o.symmetric)
            std::cout << "result_b: " << result_json(pair.b.result).dump() << "\n";
        std::cout << "session: " << pair.a.transcript->session_id << "\n";
        std::cout << "he_ops: A=" << pair.a.counters.he_ops()
                  << " B=" << pair.b.counters.he_ops() << "\n";
        if (!o.transcript_out.empty())
            std::cout << "transcript: " << o.transcript_out << "\n";
        return 0;
    }

    if (o.transport != "tcp")
        throw psimc::InputError("unknown transport '" + o.transport +
                                "' (expected memory or tcp)");
    if (o.role_text.empty())
        throw psimc::ConfigError("tcp transport needs --role A or --role B");
    net::Role role = net::parse_role(o.role_text);
    if (o.signature.empty())
        throw psimc::ConfigError("tcp transport needs an explicit shared --signature");
    cfg.signature = parse_signature_csv(o.signature);

    const std::string& kb_path = role == net::Role::A ? o.kb_a : o.kb_b;
    if (kb_path.empty())
        throw psimc::InputError(std::string("role ") + net::role_name(role) + " needs " +
                                (role == net::Role::A ? "--kb-a" : "--kb-b"));
    logic::KnowledgeBase kb = load_kb(kb_path);
    Inputs in = derive_inputs(o.protocol, kb, cfg.signature, caps);

    if (o.listen.empty() == o.connect.empty())
        throw psimc::ConfigError("tcp transport needs exactly one of --listen or --connect");
    std::shared_ptr<net::Channel> channel;
    if (!o.listen.empty()) {
        net::TcpListener listener(o.listen);
        if (!o.port_file.empty()) {
            std::ofstream pf(o.port_file, std::ios::trunc);
            if (!pf) throw psimc::InputError("cannot write '" + o.port_file + "'");
            pf << listener.port() << "\n";
        }
        channel = listener.accept(cfg.recv_timeout);
    } else {
        for (int attempt = 0;; ++attempt) {
            try {
                channel = net::tcp_connect(o.connect);
                break;
            } catch (const psimc::ChannelError&) {
                if (attempt >= 19) throw;
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
        }
    }

    smpc::ProtocolOutcome out = run_protocol(*channel, role, cfg, o.protocol, in);

    if (!o.transcript_out.empty()) {
        json arr = json::array();
        append_transcripts(arr, out);
        write_transcripts(o.transcript_out, arr);
    }
    if (o.json_out) {
        emit_json({{"v", 1},
                   {"protocol", o.protocol},
                   {"transport", "tcp"},
                   {"role", net::role_name(role)},
                   {"seed", o.seed},
                   {"symmetric", o.symmetric},
                   {"result", result_json(out.result)},
                   {"session_id", out.transcript->session_id},
                   {"counters", out.counters.to_json()}});
        return 0;
    }
    std::cout << "protocol: " << o.protocol << "\n";
    std::cout << "role: " << net::role_name(role) << "\n";
    std::cout << "result: " << result_json(out.result).dump() << "\n";
    std::cout << "session: " << out.transcript->session_id << "\n";
    if (!o.transcript_out.empty())
        std::cout << "transcript: " << o.transcript_out << "\n";
    return 0;
}

// --- audit ----------------------------------------------------------------------

struct AuditOpts {
    std::string path;
    bool json_out = false;
};

int cmd_audit(const AuditOpts& o) {
    json doc;
    try {
        doc = json::parse(read_file(o.path));
    } catch (const json::exception& e) {
        throw psimc::InputError("malformed transcript file: " + std::string(e.what()));
    }
    json list;
    if (doc.is_object() && doc.contains("transcripts") && doc.at("transcripts").is_array())
        list = doc.at("transcripts");
    else if (doc.is_object() && doc.contains("entries"))
        list = json::array({doc});
    else
        throw psimc::InputError("expected a transcript object or {\"transcripts\": [...]}");

    std::vector<privacy::LeakageReport> reports;
    for (const auto& item : list) {
        net::Transcript t;
        try {
            t = net::Transcript::from_json(item);
        } catch (const json::exception& e) {
            throw psimc::InputError("malformed transcript: " + std::string(e.what()));
        }
        reports.push_back(privacy::audit_transcript(t));
    }

    std::size_t violations = 0;
    for (const auto& r : reports) violations += r.count(privacy::Level::Violation);

    if (o.json_out) {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(r.to_json());
        emit_json({{"v", 1}, {"violations", violations}, {"reports", arr}});
    } else {
        for (const auto& r : reports) {
            std::cout << r.protocol << " owner=" << net::role_name(r.owner)
                      << (r.clean() ? " clean" : " VIOLATIONS") << "\n";
            for (const auto& f : r.findings)
                std::cout << "  [" << privacy::level_name(f.level) << "] " << f.rule << ": "
                          << f.message << "\n";
        }
        std::cout << "violations: " << violations << "\n";
    }
    return violations > 0 ? 4 : 0;
}

// --- bench ----------------------------------------------------------------------

struct BenchOpts {
    std::string protocol;
    std::size_t min_atoms = 2;
    std::size_t max_atoms = 8;
    std::size_t trials = 1;
    std::size_t model_count = 1;
    std::uint64_t seed = 0;
};

logic::Signature bench_signature(std::size_t n) {
    std::vector<std::string> atoms;
    for (std::size_t i = 1; i <= n; ++i) {
        char name[8];
        std::snprintf(name, sizeof(name), "x%02zu", i);
        atoms.emplace_back(name);
    }
    return logic::Signature(atoms);
}

logic::Interpretation random_model(psimc::he::Rng& rng, std::size_t n) {
    logic::Interpretation w;
    w.bits.resize(n);
    for (auto& b : w.bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1);
    return w;
}

void bench_row(const std::string& protocol, std::size_t atoms, std::size_t trial,
               const smpc::ProtocolOutcome& out, std::int64_t wall_us) {
    const net::Counters& c = out.counters;
    std::cout << protocol << "," << atoms << "," << trial << ","
              << net::role_name(out.role) << "," << result_json(out.result).dump() << ","
              << c.he_adds << "," << c.he_subs << "," << c.he_muls << "," << c.he_pows
              << "," << c.he_ops() << "," << c.encryptions << "," << c.decryptions << ","
              << c.frames_sent << "," << c.frames_received << "," << c.ciphertexts_seen
              << "," << c.alg1_subrounds << "," << wall_us << "\n";
}

int cmd_bench(const BenchOpts& o) {
    Caps caps = effective_caps();
    if (!known_protocol(o.protocol))
        throw psimc::ConfigError("unknown protocol '" + o.protocol + "'");
    if (o.min_atoms == 0 || o.min_atoms > o.max_atoms)
        throw psimc::InputError("bad atom range");
    if (o.max_atoms > caps.max_atoms)
        throw psimc::CapError("atom range exceeds the cap of " +
                              std::to_string(caps.max_atoms));

    std::cout << "protocol,atoms,trial,role,result,he_adds,he_subs,he_muls,he_pows,he_ops,"
                 "encryptions,decryptions,frames_sent,frames_received,ciphertexts_seen,"
                 "alg1_subrounds,wall_us\n";
    for (std::size_t n = o.min_atoms; n <= o.max_atoms; ++n) {
        for (std::size_t trial = 0; trial < o.trials; ++trial) {
            std::uint64_t run_seed = o.seed * 6364136223846793005ull +
                                     n * 1442695040888963407ull + trial;
            psimc::he::Rng rng(run_seed);
            smpc::SessionConfig cfg;
            cfg.signature = bench_signature(n);
            cfg.seed = run_seed;
            cfg.max_atoms = caps.max_atoms;

            Inputs in_a;
            Inputs in_b;
            if (o.protocol == smpc::proto::kAlg1) {
                in_a.w = random_model(rng, n);
                in_b.w = random_model(rng, n);
            } else if (o.protocol == smpc::proto::kAlg2) {
                in_a.kb = logic::parse_kb("x01 | !x01");
                in_b.kb = in_a.kb;
            } else if (o.protocol == smpc::proto::kAlg3 ||
                       o.protocol == smpc::proto::kAlg4) {
                for (std::size_t i = 0; i < o.model_count; ++i) {
                    in_a.ms.push_back(random_model(rng, n));
                    in_b.ms.push_back(random_model(rng, n));
                }
            } else {
                in_a.value = rng.uniform(0, (std::uint64_t(1) << n) - 1);
                in_b.value = rng.uniform(0, (std::uint64_t(1) << n) - 1);
            }

            auto start = std::chrono::steady_clock::now();
            smpc::PairOutcome pair =
                smpc::run_pair_memory([&](net::Channel& ch, net::Role r) {
                    return run_protocol(ch, r, cfg, o.protocol,
                                        r == net::Role::A ? in_a : in_b);
                });
            auto wall_us = std::chrono::duration_cast<std::chrono::microseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
            bench_row(o.protocol, n, trial, pair.a, wall_us);
            bench_row(o.protocol, n, trial, pair.b, wall_us);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-party inconsistency measures over encrypted exchanges"};
    app.require_subcommand(1);

    OracleOpts oracle;
    auto* oracle_cmd =
        app.add_subcommand("oracle", "plaintext measures of each KB and of their union");
    oracle_cmd->add_option("--kb-a", oracle.kb_a, "first knowledge base file")->required();
    oracle_cmd->add_option("--kb-b", oracle.kb_b, "second knowledge base file");
    oracle_cmd->add_option("--signature", oracle.signature, "comma-separated atom list");
    oracle_cmd->add_flag("--json", oracle.json_out, "JSON output");

    MeasureOpts measure;
    auto* measure_cmd =
        app.add_subcommand("measure", "run a two-party protocol and print the result");
    measure_cmd->add_option("--protocol", measure.protocol, "alg1|alg2|alg3|alg4|psi")
        ->required();
    measure_cmd->add_option("--transport", measure.transport, "memory|tcp");
    measure_cmd->add_option("--kb-a", measure.kb_a, "role A knowledge base file");
    measure_cmd->add_option("--kb-b", measure.kb_b, "role B knowledge base file");
    measure_cmd->add_option("--signature", measure.signature, "comma-separated atom list");
    measure_cmd->add_option("--listen", measure.listen, "bind host:port and accept");
    measure_cmd->add_option("--connect", measure.connect, "dial host:port");
    measure_cmd->add_option("--role", measure.role_text, "A or B (tcp only)");
    measure_cmd->add_option("--transcript-out", measure.transcript_out,
                            "write session transcripts to this JSON file");
    measure_cmd->add_option("--port-file", measure.port_file,
                            "write the bound listen port to this file");
    auto* seed_opt = measure_cmd->add_option("--seed", measure.seed, "deterministic seed");
    measure_cmd->add_option("--timeout-ms", measure.timeout_ms, "receive timeout");
    measure_cmd->add_flag("--symmetric", measure.symmetric,
                          "run a second pass with the roles swapped");
    measure_cmd->add_flag("--json", measure.json_out, "JSON output (needs --seed)");

    AuditOpts audit;
    auto* audit_cmd =
        app.add_subcommand("audit", "check recorded transcripts for leakage");
    audit_cmd->add_option("path", audit.path, "transcript JSON file")->required();
    audit_cmd->add_flag("--json", audit.json_out, "JSON output");

    BenchOpts bench;
    auto* bench_cmd = app.add_subcommand("bench", "CSV counters over an atom range");
    bench_cmd->add_option("--protocol", bench.protocol, "alg1|alg2|alg3|alg4|psi")
        ->required();
    bench_cmd->add_option("--min-atoms", bench.min_atoms, "smallest signature size");
    bench_cmd->add_option("--max-atoms", bench.max_atoms, "largest signature size");
    bench_cmd->add_option("--trials", bench.trials, "runs per size");
    bench_cmd->add_option("--models", bench.model_count, "models per side (alg3/alg4)");
    bench_cmd->add_option("--seed", bench.seed, "deterministic seed");

    CLI11_PARSE(app, argc, argv);
    measure.seed_given = seed_opt->count() > 0;

    try {
        if (*oracle_cmd) return cmd_oracle(oracle);
        if (*measure_cmd) return cmd_measure(measure);
        if (*audit_cmd) return cmd_audit(audit);
        return cmd_bench(bench);
    } catch (const psimc::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const psimc::CapError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const psimc::ChannelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const psimc::ProtocolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const psimc::CryptoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const psimc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
