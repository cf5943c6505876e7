#include "psimc/privacy.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include "psimc/bytes.hpp"
#include "psimc/errors.hpp"
#include "psimc/he.hpp"
#include "psimc/measures.hpp"
#include "psimc/protocols.hpp"

namespace psimc::privacy {

using net::Frame;
using net::Transcript;
using nlohmann::json;

const char* level_name(Level level) {
    switch (level) {
        case Level::Note: return "note";
        case Level::Concession: return "concession";
        case Level::Violation: return "violation";
    }
    return "unknown";
}

std::size_t LeakageReport::count(Level level) const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(),
                      [&](const Finding& f) { return f.level == level; }));
}

json LeakageReport::to_json() const {
    json arr = json::array();
    for (const auto& f : findings)
        arr.push_back({{"rule", f.rule}, {"level", level_name(f.level)}, {"message", f.message}});
    return {{"v", 1},
            {"protocol", protocol},
            {"owner", net::role_name(owner)},
            {"clean", clean()},
            {"violations", count(Level::Violation)},
            {"findings", arr}};
}

namespace {

struct Audit {
    const Transcript& t;
    LeakageReport report;

    void add(std::string rule, Level level, std::string message) {
        report.findings.push_back({std::move(rule), level, std::move(message)});
    }

    std::string frame_tag(const Frame& f) const {
        return std::string(net::role_name(f.from)) + "#" + std::to_string(f.seq);
    }

    // --- schema -------------------------------------------------------------

    bool keys_exactly(const Frame& f, const std::vector<std::string>& keys) {
        if (!f.body.is_object()) {
            add("frame-schema", Level::Violation,
                "frame " + frame_tag(f) + " (" + f.kind + ") body is not an object");
            return false;
        }
        bool ok = true;
        for (const auto& k : keys)
            if (!f.body.contains(k)) {
                add("frame-schema", Level::Violation,
                    "frame " + frame_tag(f) + " (" + f.kind + ") is missing key '" + k + "'");
                ok = false;
            }
        for (const auto& [k, v] : f.body.items())
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                add("frame-schema", Level::Violation,
                    "frame " + frame_tag(f) + " (" + f.kind + ") carries extra key '" + k +
                        "'; only ciphertexts and fixed metadata may travel");
                ok = false;
            }
        return ok;
    }

    he::CtPtr decode_ct(const Frame& f, const json& encoded) {
        if (!encoded.is_string()) {
            add("frame-schema", Level::Violation,
                "frame " + frame_tag(f) + " carries a non-string ciphertext entry");
            return nullptr;
        }
        try {
            return he::deserialize_ct(bytes::base64_decode(encoded.get<std::string>()));
        } catch (const Error& e) {
            add("frame-schema", Level::Violation,
                "frame " + frame_tag(f) + " carries an undecodable ciphertext: " + e.what());
            return nullptr;
        }
    }

    std::vector<he::CtPtr> frame_cts(const Frame& f) {
        std::vector<he::CtPtr> out;
        if (f.kind == net::kind::kCt) {
            if (keys_exactly(f, {"ct"}))
                if (auto ct = decode_ct(f, f.body.at("ct"))) out.push_back(ct);
        } else if (f.kind == net::kind::kCtVector || f.kind == net::kind::kCtList) {
            if (keys_exactly(f, {"cts"})) {
                if (!f.body.at("cts").is_array()) {
                    add("frame-schema", Level::Violation,
                        "frame " + frame_tag(f) + " 'cts' is not an array");
                } else {
                    for (const auto& item : f.body.at("cts"))
                        if (auto ct = decode_ct(f, item)) out.push_back(ct);
                }
            }
        }
        return out;
    }

    void check_schema(const Frame& f) {
        if (f.kind == net::kind::kPubkey) {
            keys_exactly(f, {"key_id", "q", "g", "h", "rho", "protocol", "atoms",
                             "config_hash"});
        } else if (f.kind == net::kind::kResult) {
            if (keys_exactly(f, {"status"}) && f.body.at("status") != "done")
                add("frame-schema", Level::Violation,
                    "frame " + frame_tag(f) + " result status is not the bare marker");
        } else if (f.kind == net::kind::kAbort) {
            keys_exactly(f, {"reason"});
        }
        // ct kinds are validated while their ciphertexts are collected
    }

    // --- scalar allow list ----------------------------------------------------

    void collect_scalars(const he::CtPtr& root, std::set<he::Field>& out) {
        std::vector<const he::Ciphertext*> stack{root.get()};
        std::unordered_set<const he::Ciphertext*> seen;
        while (!stack.empty()) {
            const he::Ciphertext* node = stack.back();
            stack.pop_back();
            if (node == nullptr || !seen.insert(node).second) continue;
            if (node->is_leaf()) continue;
            for (const he::Operand* op : {&node->lhs(), &node->rhs()}) {
                if (op->ct)
                    stack.push_back(op->ct.get());
                else
                    out.insert(op->scalar);
            }
        }
    }

    void check_scalars(const Frame& f, const std::vector<he::CtPtr>& cts,
                       const std::set<he::Field>& allowed) {
        std::set<he::Field> found;
        for (const auto& ct : cts) collect_scalars(ct, found);
        std::string offending;
        for (he::Field s : found)
            if (!allowed.count(s)) {
                if (!offending.empty()) offending += ", ";
                offending += std::to_string(s);
            }
        if (!offending.empty())
            add("scalar-allowlist", Level::Violation,
                "frame " + frame_tag(f) + " uses public scalars {" + offending +
                    "} outside the protocol allow list; private constants must be encrypted");
    }

    // --- round patterns --------------------------------------------------------

    static std::string join_kinds(const std::vector<std::string>& kinds) {
        std::string out = "[";
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (i) out += ", ";
            out += kinds[i];
        }
        return out + "]";
    }

    void expect_kinds(const char* who, const std::vector<std::string>& got,
                      const std::vector<std::string>& want) {
        if (got != want)
            add("round-pattern", Level::Violation,
                std::string(who) + " frames ran " + join_kinds(got) + ", expected " +
                    join_kinds(want));
    }

    void run() {
        report.protocol = t.protocol;
        report.owner = t.owner;

        if (t.entries.empty()) {
            add("completeness", Level::Violation, "transcript holds no frames");
            return;
        }

        // sequencing: per sender the seq numbers count up from zero
        std::map<net::Role, std::uint64_t> next_seq;
        for (const auto& e : t.entries) {
            std::uint64_t want = next_seq[e.frame.from]++;
            if (e.frame.seq != want)
                add("sequencing", Level::Violation,
                    "frame from " + std::string(net::role_name(e.frame.from)) +
                        " has seq " + std::to_string(e.frame.seq) + ", expected " +
                        std::to_string(want));
        }

        for (const auto& e : t.entries) check_schema(e.frame);

        // pubkey metadata drives the structural rules
        std::size_t atoms = 0;
        bool have_atoms = false;
        for (const auto& e : t.entries)
            if (e.frame.kind == net::kind::kPubkey && e.frame.from == net::Role::A &&
                e.frame.body.is_object() && e.frame.body.contains("atoms") &&
                e.frame.body.at("atoms").is_number_unsigned()) {
                atoms = e.frame.body.at("atoms").get<std::size_t>();
                have_atoms = true;
                break;
            }

        const std::string& p = t.protocol;
        std::set<he::Field> allowed;
        if (p == smpc::proto::kAlg2 || p == smpc::proto::kAlg1Binary) allowed = {1};
        if (p == smpc::proto::kAlg4 && have_atoms)
            for (std::size_t i = 0; i <= atoms; ++i) allowed.insert(i);

        std::vector<std::string> from_a;
        std::vector<std::string> from_b;
        for (const auto& e : t.entries) {
            auto cts = frame_cts(e.frame);
            check_scalars(e.frame, cts, allowed);
            (e.frame.from == net::Role::A ? from_a : from_b).push_back(e.frame.kind);
        }

        const Frame& last = t.entries.back().frame;
        if (last.kind == net::kind::kAbort) {
            std::string reason = last.body.is_object() && last.body.contains("reason") &&
                                         last.body.at("reason").is_string()
                                     ? last.body.at("reason").get<std::string>()
                                     : "(unreadable reason)";
            add("abort", Level::Note,
                "session aborted by " + std::string(net::role_name(last.from)) + ": " +
                    reason + "; round checks skipped");
            return;
        }
        if (last.kind != net::kind::kResult) {
            add("completeness", Level::Violation,
                "transcript does not end in a result or abort frame");
            return;
        }

        check_rounds(p, atoms, have_atoms, from_a, from_b);
        add_design_findings(p);
    }

    std::size_t body_cts_size(const Frame& f) const {
        if (f.body.is_object() && f.body.contains("cts") && f.body.at("cts").is_array())
            return f.body.at("cts").size();
        return 0;
    }

    void check_vector_widths(std::size_t want) {
        for (const auto& e : t.entries)
            if (e.frame.kind == net::kind::kCtVector && body_cts_size(e.frame) != want)
                add("vector-length", Level::Violation,
                    "frame " + frame_tag(e.frame) + " carries " +
                        std::to_string(body_cts_size(e.frame)) + " ciphertexts, expected " +
                        std::to_string(want));
    }

    void check_rounds(const std::string& p, std::size_t atoms, bool have_atoms,
                      const std::vector<std::string>& from_a,
                      const std::vector<std::string>& from_b) {
        namespace kind = net::kind;
        std::size_t vectors = static_cast<std::size_t>(
            std::count(from_a.begin(), from_a.end(), kind::kCtVector));
        std::size_t lists = static_cast<std::size_t>(
            std::count(from_b.begin(), from_b.end(), kind::kCtList));

        if (p == smpc::proto::kAlg1 || p == smpc::proto::kAlg1Binary ||
            p == smpc::proto::kAlg2) {
            expect_kinds("keyholder", from_a, {kind::kPubkey, kind::kCtVector, kind::kResult});
            expect_kinds("peer", from_b, {kind::kCt});
            if (have_atoms && p == smpc::proto::kAlg1) check_vector_widths(atoms);
            if (have_atoms && p == smpc::proto::kAlg2 && atoms < 61)
                check_vector_widths(std::size_t(1) << atoms);
        } else if (p == smpc::proto::kAlg3) {
            std::vector<std::string> want_a{kind::kPubkey};
            want_a.insert(want_a.end(), vectors, kind::kCtVector);
            want_a.push_back(kind::kResult);
            expect_kinds("keyholder", from_a, want_a);
            expect_kinds("peer", from_b, std::vector<std::string>(lists, kind::kCtList));
            if (vectors == 0)
                add("round-pattern", Level::Violation, "keyholder sent no query vectors");
            if (lists != vectors)
                add("round-pattern", Level::Violation,
                    "peer answered " + std::to_string(lists) + " of " +
                        std::to_string(vectors) + " query vectors");
            if (have_atoms) check_vector_widths(atoms);
        } else if (p == smpc::proto::kAlg4) {
            std::vector<std::string> want_a{kind::kPubkey};
            want_a.insert(want_a.end(), vectors, kind::kCtVector);
            want_a.push_back(kind::kResult);
            expect_kinds("keyholder", from_a, want_a);
            expect_kinds("peer", from_b, {kind::kCtList});
            if (have_atoms) {
                check_vector_widths(atoms);
                if (atoms < 61 && vectors != (std::size_t(1) << atoms))
                    add("padding", Level::Violation,
                        "keyholder sent " + std::to_string(vectors) +
                            " vectors, expected the padded " +
                            std::to_string(std::size_t(1) << atoms) +
                            "; the vector count must not depend on the model count");
                for (const auto& e : t.entries)
                    if (e.frame.kind == kind::kCtList && body_cts_size(e.frame) != atoms + 1)
                        add("result-list-length", Level::Violation,
                            "frame " + frame_tag(e.frame) + " result list holds " +
                                std::to_string(body_cts_size(e.frame)) +
                                " entries, expected " + std::to_string(atoms + 1));
            }
        } else if (p == smpc::proto::kPsi) {
            expect_kinds("keyholder", from_a, {kind::kPubkey, kind::kCt, kind::kResult});
            expect_kinds("peer", from_b, {kind::kCt});
        } else {
            add("round-pattern", Level::Note, "unknown protocol '" + p + "', round checks skipped");
        }
    }

    void add_design_findings(const std::string& p) {
        if (p == smpc::proto::kAlg3) {
            std::size_t vectors = 0;
            std::size_t list_len = 0;
            for (const auto& e : t.entries) {
                if (e.frame.kind == net::kind::kCtVector) ++vectors;
                if (e.frame.kind == net::kind::kCtList && list_len == 0)
                    list_len = body_cts_size(e.frame);
            }
            add("model-counts", Level::Concession,
                "the query count reveals the keyholder's model count (" +
                    std::to_string(vectors) + ") and the reply length the peer's (" +
                    std::to_string(list_len) + ")");
            if (t.owner == net::Role::A) {
                std::vector<std::uint64_t> distances;
                for (const auto& o : t.observations)
                    if (o.label == "alg3.distance") distances.push_back(o.value);
                std::sort(distances.begin(), distances.end());
                std::string list;
                for (std::size_t i = 0; i < distances.size(); ++i) {
                    if (i) list += ", ";
                    list += std::to_string(distances[i]);
                }
                add("distance-multiset", Level::Concession,
                    "the keyholder decrypted every pairwise distance, not only the minimum: [" +
                        list + "]");
            }
        }
        if (p == smpc::proto::kAlg4 && t.owner == net::Role::A) {
            for (const auto& o : t.observations)
                if (o.label.rfind("alg4.L[", 0) == 0 && o.value == 1)
                    add("blinding-fixed-point", Level::Note,
                        "entry " + o.label +
                            " decrypted to 1; raising to p-1 fixes 1 and sends q-1 to 1 "
                            "for every odd prime p, so the entry is revealed to have had "
                            "small multiplicative order");
        }
    }
};

}  // namespace

LeakageReport audit_transcript(const Transcript& t) {
    Audit audit{t, {}};
    audit.run();
    return audit.report;
}

Rational reduced(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw InputError("rational with zero denominator");
    if (num == 0) return {0, 1};
    std::uint64_t g = std::gcd(num, den);
    return {num / g, den / g};
}

std::string to_string(const Rational& r) {
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

std::vector<logic::Interpretation> models_below(
    const std::vector<logic::Interpretation>& models, std::uint64_t threshold,
    std::size_t width) {
    if (width > limits::kDefaultMaxAtoms) throw CapError("width above the atom cap");
    if (models.empty()) throw InputError("empty model list");
    for (const auto& m : models)
        if (m.bits.size() != width) throw SignatureError("model width mismatch");
    std::vector<logic::Interpretation> out;
    for (std::uint64_t idx = 0; idx < (std::uint64_t(1) << width); ++idx) {
        logic::Interpretation m = logic::Interpretation::from_index(idx, width);
        auto d = static_cast<std::uint64_t>(measures::min_mismatch_oracle(models, {m}));
        if (d < threshold) out.push_back(m);
    }
    return out;
}

Rational guess_probability(const std::vector<logic::Interpretation>& own_models,
                           std::uint64_t min_distance, std::size_t width) {
    std::uint64_t below = models_below(own_models, min_distance, width).size();
    std::uint64_t total = std::uint64_t(1) << width;
    if (below >= total)
        throw InputError("the revealed minimum rules out every interpretation");
    return reduced(1, total - below);
}

Rational guess_probability_uniform(std::size_t candidate_count) {
    if (candidate_count == 0) throw InputError("no candidates to guess from");
    return reduced(1, candidate_count);
}

}  // namespace psimc::privacy
