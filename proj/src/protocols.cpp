#include "psimc/protocols.hpp"

#include <algorithm>
#include <thread>

#include "psimc/bytes.hpp"

namespace psimc::smpc {

using logic::BitSequence;
using logic::Interpretation;
using logic::KnowledgeBase;
using net::Frame;
using net::FramedPeer;
using net::Role;
using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, Role role, int pass) {
    std::uint64_t x = splitmix64(seed);
    x = splitmix64(x ^ (role == Role::A ? 0x41ull : 0x42ull));
    return splitmix64(x ^ (static_cast<std::uint64_t>(pass) << 8));
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace

std::string config_hash(const SessionConfig& cfg, const std::string& protocol) {
    std::string text = protocol;
    text += '\n';
    for (const auto& a : cfg.signature.atoms()) {
        text += a;
        text += ',';
    }
    text += '\n';
    text += std::to_string(cfg.params.q);
    text += '\n';
    text += std::to_string(cfg.params.rho);
    text += '\n';
    text += cfg.symmetric ? '1' : '0';
    return hex64(fnv1a(text));
}

namespace {

// One party's state for one pass of one protocol.
struct Session {
    Session(net::Channel& ch, Role role, const SessionConfig& cfg, std::string protocol,
            int pass)
        : cfg(cfg),
          protocol(std::move(protocol)),
          transcript(std::make_shared<net::Transcript>()),
          peer(shared_channel(ch), role, *transcript),
          rng(mix_seed(cfg.seed, role, pass)) {
        transcript->session_id = hex64(splitmix64(mix_seed(cfg.seed, Role::A, pass) ^
                                                  fnv1a(this->protocol)));
        transcript->protocol = this->protocol;
        transcript->owner = role;
    }

    // The channel outlives the session; wrap it without owning it.
    static std::shared_ptr<net::Channel> shared_channel(net::Channel& ch) {
        return std::shared_ptr<net::Channel>(&ch, [](net::Channel*) {});
    }

    const SessionConfig& cfg;
    std::string protocol;
    std::shared_ptr<net::Transcript> transcript;
    FramedPeer peer;
    he::Rng rng;

    net::Counters& counters() { return transcript->counters; }

    // --- counted HE helpers ---

    he::CtPtr enc(const he::PublicKey& pk, he::Field m) {
        ++counters().encryptions;
        return he::encrypt(pk, m, rng);
    }
    he::Field dec(const he::SecretKey& sk, const he::CtPtr& ct, const std::string& label) {
        ++counters().decryptions;
        he::Field v = he::decrypt(sk, ct);
        transcript->observations.push_back({label, v});
        return v;
    }
    he::CtPtr add(const he::Operand& a, const he::Operand& b) {
        ++counters().he_adds;
        return he::ct_add(a, b);
    }
    he::CtPtr sub(const he::Operand& a, const he::Operand& b) {
        ++counters().he_subs;
        return he::ct_sub(a, b);
    }
    he::CtPtr mul(const he::Operand& a, const he::Operand& b) {
        ++counters().he_muls;
        return he::ct_mul(a, b);
    }
    he::CtPtr pow(const he::CtPtr& base, const he::Operand& e) {
        ++counters().he_pows;
        return he::ct_pow(base, e);
    }

    // --- key exchange ---

    he::KeyPair keygen_and_announce() {
        ++counters().keygens;
        he::KeyPair kp = he::keygen(cfg.params, rng);
        peer.send(net::kind::kPubkey,
                  {{"key_id", he::key_id_hex(kp.pub.key_id)},
                   {"q", kp.pub.q},
                   {"g", kp.pub.g},
                   {"h", kp.pub.h},
                   {"rho", kp.pub.rho},
                   {"protocol", protocol},
                   {"atoms", cfg.signature.size()},
                   {"config_hash", config_hash(cfg, protocol)}});
        return kp;
    }

    he::PublicKey receive_pubkey() {
        Frame f = peer.expect(net::kind::kPubkey, cfg.recv_timeout);
        std::string their_hash;
        he::PublicKey pk;
        try {
            their_hash = f.body.at("config_hash").get<std::string>();
            auto id = bytes::from_hex(f.body.at("key_id").get<std::string>());
            if (id.size() != pk.key_id.size()) throw ProtocolError("bad key id length");
            std::copy(id.begin(), id.end(), pk.key_id.begin());
            pk.q = f.body.at("q").get<std::uint64_t>();
            pk.g = f.body.at("g").get<std::uint64_t>();
            pk.h = f.body.at("h").get<std::uint64_t>();
            pk.rho = f.body.at("rho").get<unsigned>();
        } catch (const json::exception& e) {
            peer.abort("bad pubkey frame");
            throw ProtocolError(std::string("bad pubkey frame: ") + e.what());
        }
        if (their_hash != config_hash(cfg, protocol)) {
            peer.abort("config hash mismatch");
            throw ConfigError("session configs disagree (config hash mismatch)");
        }
        if (pk.q != cfg.params.q || pk.rho != cfg.params.rho) {
            peer.abort("scheme parameter mismatch");
            throw ConfigError("scheme parameters disagree");
        }
        return pk;
    }

    // --- ciphertext framing ---

    static std::string ct_b64(const he::CtPtr& ct) {
        return bytes::base64_encode(he::serialize_ct(ct));
    }

    static he::CtPtr ct_from_b64(const std::string& text) {
        return he::deserialize_ct(bytes::base64_decode(text));
    }

    void send_ct(const he::CtPtr& ct) { peer.send(net::kind::kCt, {{"ct", ct_b64(ct)}}); }

    void send_ct_vector(const std::vector<he::CtPtr>& cts) {
        json arr = json::array();
        for (const auto& ct : cts) arr.push_back(ct_b64(ct));
        peer.send(net::kind::kCtVector, {{"cts", arr}});
    }

    void send_ct_list(const std::vector<he::CtPtr>& cts) {
        json arr = json::array();
        for (const auto& ct : cts) arr.push_back(ct_b64(ct));
        peer.send(net::kind::kCtList, {{"cts", arr}});
    }

    he::CtPtr recv_ct() {
        Frame f = peer.expect(net::kind::kCt, cfg.recv_timeout);
        try {
            return ct_from_b64(f.body.at("ct").get<std::string>());
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("bad ct frame: ") + e.what());
        }
    }

    static std::vector<he::CtPtr> cts_of(const Frame& f) {
        std::vector<he::CtPtr> out;
        try {
            for (const auto& item : f.body.at("cts"))
                out.push_back(ct_from_b64(item.get<std::string>()));
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("bad ciphertext frame: ") + e.what());
        }
        return out;
    }

    std::vector<he::CtPtr> recv_ct_vector(std::size_t expected_len) {
        Frame f = peer.expect(net::kind::kCtVector, cfg.recv_timeout);
        auto cts = cts_of(f);
        if (cts.size() != expected_len) {
            peer.abort("bad vector length");
            throw ProtocolError("expected " + std::to_string(expected_len) +
                                " ciphertexts, got " + std::to_string(cts.size()));
        }
        return cts;
    }

    std::vector<he::CtPtr> recv_ct_list() {
        Frame f = peer.expect(net::kind::kCtList, cfg.recv_timeout);
        return cts_of(f);
    }

    void send_done() { peer.send(net::kind::kResult, {{"status", "done"}}); }
    void recv_done() { peer.expect(net::kind::kResult, cfg.recv_timeout); }

    // --- shared protocol pieces ---

    void send_encrypted_bits(const he::PublicKey& pk, const std::uint8_t* bits,
                             std::size_t n) {
        std::vector<he::CtPtr> cts;
        cts.reserve(n);
        for (std::size_t i = 0; i < n; ++i) cts.push_back(enc(pk, bits[i] & 1u));
        send_ct_vector(cts);
    }

    // Sum of squared differences: the Hamming distance for bit inputs. B's
    // own bits enter encrypted, never as scalars.
    he::CtPtr distance_ct(const he::PublicKey& pk, const std::vector<he::CtPtr>& v,
                          const Interpretation& mine) {
        he::CtPtr acc;
        for (std::size_t i = 0; i < v.size(); ++i) {
            he::CtPtr d = sub(v[i], enc(pk, mine.bits[i] & 1u));
            he::CtPtr sq = mul(d, d);
            acc = acc ? add(acc, sq) : sq;
        }
        ++counters().alg1_subrounds;
        return acc;
    }

    // Product of (1 - a_i * b_i)^2: zero iff some index is set on both sides.
    he::CtPtr overlap_ct(const he::PublicKey& pk, const std::vector<he::CtPtr>& v,
                         const BitSequence& mine) {
        he::CtPtr acc;
        for (std::size_t i = 0; i < v.size(); ++i) {
            he::CtPtr both = mul(v[i], enc(pk, mine[i] & 1u));
            he::CtPtr flip = sub(he::Field(1), both);
            he::CtPtr sq = mul(flip, flip);
            acc = acc ? mul(acc, sq) : sq;
        }
        return acc;
    }
};

void require_shared_signature(const SessionConfig& cfg) {
    if (cfg.signature.empty()) throw InputError("empty signature");
    if (cfg.signature.size() > cfg.max_atoms)
        throw CapError("signature has " + std::to_string(cfg.signature.size()) +
                       " atoms, cap is " + std::to_string(cfg.max_atoms));
    if (cfg.signature.size() >= 61 || (cfg.params.q >> cfg.signature.size()) == 0)
        throw ConfigError("modulus too small for the signature");
}

void require_models(const std::vector<Interpretation>& models, std::size_t width) {
    if (models.empty()) throw InputError("empty model list");
    for (const auto& m : models)
        if (m.bits.size() != width)
            throw SignatureError("model width does not match the signature");
}

// --- alg1: encrypted Hamming distance ---------------------------------------

std::optional<std::uint64_t> alg1_pass(net::Channel& ch, Role role, const SessionConfig& cfg,
                                       const Interpretation& w, int pass,
                                       std::shared_ptr<net::Transcript>* out_t) {
    Session s(ch, role, cfg, proto::kAlg1, pass);
    *out_t = s.transcript;
    std::size_t n = cfg.signature.size();
    if (role == Role::A) {
        he::KeyPair kp = s.keygen_and_announce();
        s.send_encrypted_bits(kp.pub, w.bits.data(), n);
        he::CtPtr response = s.recv_ct();
        std::uint64_t v = s.dec(kp.sec, response, "alg1.result");
        s.send_done();
        return v;
    }
    he::PublicKey pk = s.receive_pubkey();
    auto v = s.recv_ct_vector(n);
    s.send_ct(s.distance_ct(pk, v, w));
    s.recv_done();
    return std::nullopt;
}

// --- alg1 binary: encrypted shared-index probe -------------------------------

std::optional<std::uint64_t> alg1_binary_pass(net::Channel& ch, Role role,
                                              const SessionConfig& cfg,
                                              const BitSequence& bits,
                                              const std::string& protocol, int pass,
                                              std::shared_ptr<net::Transcript>* out_t) {
    Session s(ch, role, cfg, protocol, pass);
    *out_t = s.transcript;
    std::size_t n = bits.size();
    if (role == Role::A) {
        he::KeyPair kp = s.keygen_and_announce();
        s.send_encrypted_bits(kp.pub, bits.data(), n);
        he::CtPtr response = s.recv_ct();
        std::uint64_t v = s.dec(kp.sec, response, protocol + ".result");
        s.send_done();
        return v;
    }
    he::PublicKey pk = s.receive_pubkey();
    auto v = s.recv_ct_vector(n);
    s.send_ct(s.overlap_ct(pk, v, bits));
    s.recv_done();
    return std::nullopt;
}

// --- alg3: minimum distance over model pairs ---------------------------------

std::optional<std::uint64_t> alg3_pass(net::Channel& ch, Role role, const SessionConfig& cfg,
                                       const std::vector<Interpretation>& models, int pass,
                                       std::shared_ptr<net::Transcript>* out_t) {
    Session s(ch, role, cfg, proto::kAlg3, pass);
    *out_t = s.transcript;
    std::size_t n = cfg.signature.size();
    if (role == Role::A) {
        he::KeyPair kp = s.keygen_and_announce();
        std::optional<std::uint64_t> best;
        for (const auto& m : models) {
            s.send_encrypted_bits(kp.pub, m.bits.data(), n);
            auto list = s.recv_ct_list();
            if (list.empty()) throw ProtocolError("empty distance list");
            for (const auto& ct : list) {
                std::uint64_t d = s.dec(kp.sec, ct, "alg3.distance");
                if (!best || d < *best) best = d;
            }
        }
        s.send_done();
        return best;
    }
    he::PublicKey pk = s.receive_pubkey();
    while (true) {
        Frame f = s.peer.recv_any(cfg.recv_timeout);
        if (f.kind == net::kind::kResult) break;
        if (f.kind != net::kind::kCtVector)
            throw ProtocolError("expected ct_vector or result frame, got " + f.kind);
        auto cts = Session::cts_of(f);
        if (cts.size() != n) {
            s.peer.abort("bad vector length");
            throw ProtocolError("expected " + std::to_string(n) + " ciphertexts, got " +
                                std::to_string(cts.size()));
        }
        std::vector<he::CtPtr> distances;
        distances.reserve(models.size());
        for (const auto& mine : models) distances.push_back(s.distance_ct(pk, cts, mine));
        s.send_ct_list(distances);
    }
    return std::nullopt;
}

// --- alg4: padded rounds plus meta-encrypted result list ---------------------

std::optional<std::uint64_t> alg4_pass(net::Channel& ch, Role role, const SessionConfig& cfg,
                                       const std::vector<Interpretation>& models, int pass,
                                       std::shared_ptr<net::Transcript>* out_t) {
    Session s(ch, role, cfg, proto::kAlg4, pass);
    *out_t = s.transcript;
    std::size_t n = cfg.signature.size();
    std::size_t rows = 1ull << n;
    if (role == Role::A) {
        he::KeyPair kp = s.keygen_and_announce();
        // Cyclic padding to 2^n entries hides how many models A really has.
        for (std::size_t i = 0; i < rows; ++i) {
            const Interpretation& m = models[i % models.size()];
            s.send_encrypted_bits(kp.pub, m.bits.data(), n);
        }
        auto list = s.recv_ct_list();
        if (list.size() != n + 1)
            throw ProtocolError("expected " + std::to_string(n + 1) +
                                " result ciphertexts, got " + std::to_string(list.size()));
        std::optional<std::uint64_t> first_zero;
        for (std::size_t i = 0; i < list.size(); ++i) {
            std::uint64_t v = s.dec(kp.sec, list[i], "alg4.L[" + std::to_string(i) + "]");
            if (!first_zero && v == 0) first_zero = i;
        }
        s.send_done();
        if (!first_zero) throw ProtocolError("result list has no zero entry");
        return first_zero;
    }
    he::PublicKey pk = s.receive_pubkey();
    std::vector<he::CtPtr> distances;
    distances.reserve(rows * models.size());
    for (std::size_t i = 0; i < rows; ++i) {
        auto cts = s.recv_ct_vector(n);
        for (const auto& mine : models) distances.push_back(s.distance_ct(pk, cts, mine));
    }
    // L[i] = prod over stored distances d of (i - d); zero iff distance i occurred.
    std::vector<he::CtPtr> result_list;
    result_list.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        he::CtPtr acc;
        for (const auto& d : distances) {
            he::CtPtr term = s.sub(he::Field(i), d);
            acc = acc ? s.mul(acc, term) : term;
        }
        result_list.push_back(acc);
    }
    // Blind every non-zero entry: raise the running prefix product to a fresh
    // prime minus one. Zeros stay zero, so A only learns the first zero index.
    for (std::size_t i = 0; i <= n; ++i) {
        he::Field p = he::random_prime(s.rng, 3, cfg.params.q);
        he::CtPtr prefix = result_list[0];
        for (std::size_t j = 1; j <= i; ++j) prefix = s.mul(prefix, result_list[j]);
        he::CtPtr exponent = s.enc(pk, p - 1);
        result_list[i] = s.pow(prefix, exponent);
    }
    s.send_ct_list(result_list);
    s.recv_done();
    return std::nullopt;
}

// --- psi singleton ------------------------------------------------------------

std::optional<std::uint64_t> psi_pass(net::Channel& ch, Role role, const SessionConfig& cfg,
                                      std::uint64_t value, int pass,
                                      std::shared_ptr<net::Transcript>* out_t) {
    Session s(ch, role, cfg, proto::kPsi, pass);
    *out_t = s.transcript;
    if (role == Role::A) {
        he::KeyPair kp = s.keygen_and_announce();
        s.send_ct(s.enc(kp.pub, value));
        he::CtPtr probe = s.recv_ct();
        std::uint64_t v = s.dec(kp.sec, probe, "psi.decrypted");
        s.send_done();
        return v == 0 ? 1 : 0;
    }
    he::PublicKey pk = s.receive_pubkey();
    he::CtPtr their_value = s.recv_ct();
    // Random nonzero blinding keeps A from learning the difference.
    he::Field r = s.rng.uniform(1, cfg.params.q - 1);
    he::CtPtr diff = s.sub(their_value, s.enc(pk, value));
    s.send_ct(s.mul(s.enc(pk, r), diff));
    s.recv_done();
    return std::nullopt;
}

// --- symmetric wrapper ---------------------------------------------------------

template <typename PassFn>
ProtocolOutcome run_symmetric(Role role, const SessionConfig& cfg,
                              const std::string& protocol, PassFn&& pass_fn) {
    std::shared_ptr<net::Transcript> primary;
    std::optional<std::uint64_t> result = pass_fn(role, 0, &primary);
    ProtocolOutcome out;
    out.protocol = protocol;
    out.role = role;
    out.result = result;
    out.counters = primary->counters;
    out.transcript = primary;
    if (cfg.symmetric) {
        std::shared_ptr<net::Transcript> second;
        std::optional<std::uint64_t> r2 = pass_fn(net::other(role), 1, &second);
        out.symmetric_transcript = second;
        if (r2) out.result = r2;
    }
    return out;
}

}  // namespace

ProtocolOutcome run_alg1(net::Channel& ch, Role role, const SessionConfig& cfg,
                         const Interpretation& w) {
    require_shared_signature(cfg);
    if (w.bits.size() != cfg.signature.size())
        throw SignatureError("interpretation width does not match the signature");
    return run_symmetric(role, cfg, proto::kAlg1,
                         [&](Role r, int pass, std::shared_ptr<net::Transcript>* t) {
                             return alg1_pass(ch, r, cfg, w, pass, t);
                         });
}

ProtocolOutcome run_alg1_binary(net::Channel& ch, Role role, const SessionConfig& cfg,
                                const BitSequence& bits) {
    if (bits.empty()) throw InputError("empty bit sequence");
    for (std::uint8_t b : bits)
        if (b > 1) throw InputError("bit sequence entries must be 0 or 1");
    return run_symmetric(role, cfg, proto::kAlg1Binary,
                         [&](Role r, int pass, std::shared_ptr<net::Transcript>* t) {
                             return alg1_binary_pass(ch, r, cfg, bits, proto::kAlg1Binary,
                                                     pass, t);
                         });
}

ProtocolOutcome run_alg2(net::Channel& ch, Role role, const SessionConfig& cfg,
                         const KnowledgeBase& kb) {
    require_shared_signature(cfg);
    BitSequence seq = logic::satisfaction_sequence(kb, cfg.signature, cfg.max_atoms);
    bool consistent = std::any_of(seq.begin(), seq.end(), [](std::uint8_t b) { return b; });
    if (!consistent)
        throw InputError("own knowledge base is inconsistent; refusing to run");
    return run_symmetric(role, cfg, proto::kAlg2,
                         [&](Role r, int pass, std::shared_ptr<net::Transcript>* t) {
                             return alg1_binary_pass(ch, r, cfg, seq, proto::kAlg2, pass, t);
                         });
}

ProtocolOutcome run_alg3(net::Channel& ch, Role role, const SessionConfig& cfg,
                         const std::vector<Interpretation>& models) {
    require_shared_signature(cfg);
    require_models(models, cfg.signature.size());
    return run_symmetric(role, cfg, proto::kAlg3,
                         [&](Role r, int pass, std::shared_ptr<net::Transcript>* t) {
                             return alg3_pass(ch, r, cfg, models, pass, t);
                         });
}

ProtocolOutcome run_alg4(net::Channel& ch, Role role, const SessionConfig& cfg,
                         const std::vector<Interpretation>& models) {
    require_shared_signature(cfg);
    require_models(models, cfg.signature.size());
    return run_symmetric(role, cfg, proto::kAlg4,
                         [&](Role r, int pass, std::shared_ptr<net::Transcript>* t) {
                             return alg4_pass(ch, r, cfg, models, pass, t);
                         });
}

ProtocolOutcome run_psi_singleton(net::Channel& ch, Role role, const SessionConfig& cfg,
                                  std::uint64_t value) {
    if (value >= cfg.params.q) throw InputError("value not in [0, q)");
    return run_symmetric(role, cfg, proto::kPsi,
                         [&](Role r, int pass, std::shared_ptr<net::Transcript>* t) {
                             return psi_pass(ch, r, cfg, value, pass, t);
                         });
}

PairOutcome run_pair_memory(const RoleRunner& runner) {
    auto [channel_a, channel_b] = net::pair_memory_channels();
    PairOutcome out;
    std::exception_ptr error_a;
    std::exception_ptr error_b;
    std::thread side_b([&, channel_b] {
        try {
            out.b = runner(*channel_b, Role::B);
        } catch (...) {
            error_b = std::current_exception();
        }
    });
    try {
        out.a = runner(*channel_a, Role::A);
    } catch (...) {
        error_a = std::current_exception();
    }
    // Tear down A's endpoint so a blocked B unblocks promptly on failure.
    if (error_a) channel_a.reset();
    side_b.join();
    if (error_a) std::rethrow_exception(error_a);
    if (error_b) std::rethrow_exception(error_b);
    return out;
}

}  // namespace psimc::smpc
