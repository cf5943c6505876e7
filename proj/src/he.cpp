#include "psimc/he.hpp"

#include <atomic>
#include <cstring>
#include <unordered_map>

#include "psimc/bytes.hpp"

namespace psimc::he {

namespace {
using u128 = unsigned __int128;
}

Field f_add(Field a, Field b, Field q) {
    return static_cast<Field>(((u128)(a % q) + (b % q)) % q);
}

Field f_sub(Field a, Field b, Field q) {
    return static_cast<Field>(((u128)(a % q) + q - (b % q)) % q);
}

Field f_mul(Field a, Field b, Field q) {
    return static_cast<Field>((u128)(a % q) * (b % q) % q);
}

Field f_pow(Field base, std::uint64_t exp, Field q) {
    Field result = 1 % q;
    Field acc = base % q;
    while (exp > 0) {
        if (exp & 1) result = f_mul(result, acc, q);
        acc = f_mul(acc, acc, q);
        exp >>= 1;
    }
    return result;
}

bool is_prime_u64(std::uint64_t n) {
    constexpr std::uint64_t small[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (n < 2) return false;
    for (std::uint64_t p : small) {
        if (n % p == 0) return n == p;
    }
    std::uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    for (std::uint64_t a : small) {
        std::uint64_t x = f_pow(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < r; ++i) {
            x = f_mul(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi) {
    std::uniform_int_distribution<std::uint64_t> dist(lo, hi);
    return dist(eng_);
}

void Rng::fill(std::uint8_t* out, std::size_t n) {
    std::size_t i = 0;
    while (i < n) {
        std::uint64_t v = eng_();
        for (int j = 0; j < 8 && i < n; ++j, ++i) {
            out[i] = static_cast<std::uint8_t>(v);
            v >>= 8;
        }
    }
}

Field random_prime(Rng& rng, Field lo, Field hi) {
    if (lo >= hi) throw Error("empty prime range");
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        Field c = rng.uniform(lo, hi - 1);
        if (is_prime_u64(c)) return c;
    }
    throw Error("no prime found in range");
}

void SchemeParams::validate() const {
    if (rho < 64) throw CryptoError("rho must be at least 64");
    if (q < 3 || !is_prime_u64(q)) throw CryptoError("q must be an odd prime");
}

std::string key_id_hex(const KeyId& id) {
    return bytes::to_hex(id.data(), id.size());
}

namespace {
std::atomic<std::uint64_t> g_key_counter{1};
constexpr Field kGenerator = 3;
}  // namespace

KeyPair keygen(const SchemeParams& params, Rng& rng) {
    params.validate();
    KeyPair kp;
    // Half random, half a process-wide counter: unique even under a fixed seed.
    std::uint64_t serial = g_key_counter.fetch_add(1);
    rng.fill(kp.pub.key_id.data(), 8);
    for (int i = 0; i < 8; ++i)
        kp.pub.key_id[8 + i] = static_cast<std::uint8_t>(serial >> (56 - 8 * i));
    kp.pub.q = params.q;
    kp.pub.g = kGenerator % params.q;
    kp.pub.rho = params.rho;
    kp.sec.key_id = kp.pub.key_id;
    kp.sec.q = params.q;
    kp.sec.s = rng.uniform(2, params.q - 2);
    kp.pub.h = f_pow(kp.pub.g, kp.sec.s, params.q);
    return kp;
}

// --- ciphertext construction -----------------------------------------------

CtPtr Ciphertext::make_leaf(LeafData leaf) {
    auto* ct = new Ciphertext();
    ct->key_id_ = leaf.key_id;
    ct->leaf_ = std::make_unique<LeafData>(std::move(leaf));
    return CtPtr(ct);
}

CtPtr Ciphertext::make_node(CtOp op, Operand a, Operand b) {
    if (op == CtOp::Pow) {
        if (!a.ct) throw CryptoError("pow base must be a ciphertext");
    } else if (!a.ct && !b.ct) {
        throw CryptoError("at least one operand must be a ciphertext");
    }
    if (a.ct && b.ct && a.ct->key_id() != b.ct->key_id())
        throw CryptoError("operands sealed under different keys");
    auto* ct = new Ciphertext();
    ct->op_ = op;
    ct->key_id_ = a.ct ? a.ct->key_id() : b.ct->key_id();
    ct->operands_.push_back(std::move(a));
    ct->operands_.push_back(std::move(b));
    return CtPtr(ct);
}

CtPtr ct_add(const Operand& a, const Operand& b) {
    return Ciphertext::make_node(CtOp::Add, a, b);
}

CtPtr ct_sub(const Operand& a, const Operand& b) {
    return Ciphertext::make_node(CtOp::Sub, a, b);
}

CtPtr ct_mul(const Operand& a, const Operand& b) {
    return Ciphertext::make_node(CtOp::Mul, a, b);
}

CtPtr ct_pow(const CtPtr& base, const Operand& exponent) {
    return Ciphertext::make_node(CtOp::Pow, Operand(base), exponent);
}

namespace {

template <typename Visit>
void walk_dag(const Ciphertext& root, Visit&& visit) {
    std::unordered_map<const Ciphertext*, bool> seen;
    std::vector<const Ciphertext*> stack{&root};
    while (!stack.empty()) {
        const Ciphertext* n = stack.back();
        stack.pop_back();
        if (seen.count(n)) continue;
        seen[n] = true;
        visit(*n);
        if (!n->is_leaf()) {
            if (n->lhs().ct) stack.push_back(n->lhs().ct.get());
            if (n->rhs().ct) stack.push_back(n->rhs().ct.get());
        }
    }
}

}  // namespace

std::size_t op_node_count(const Ciphertext& ct) {
    std::size_t n = 0;
    walk_dag(ct, [&](const Ciphertext& c) {
        if (!c.is_leaf()) ++n;
    });
    return n;
}

std::size_t total_node_count(const Ciphertext& ct) {
    std::size_t n = 0;
    walk_dag(ct, [&](const Ciphertext&) { ++n; });
    return n;
}

bool structurally_equal(const Ciphertext& a, const Ciphertext& b) {
    if (a.is_leaf() != b.is_leaf()) return false;
    if (a.is_leaf()) {
        return a.leaf().key_id == b.leaf().key_id && a.leaf().nonce == b.leaf().nonce &&
               a.leaf().sealed == b.leaf().sealed;
    }
    if (a.op() != b.op()) return false;
    for (int i = 0; i < 2; ++i) {
        const Operand& oa = i == 0 ? a.lhs() : a.rhs();
        const Operand& ob = i == 0 ? b.lhs() : b.rhs();
        if (oa.is_scalar() != ob.is_scalar()) return false;
        if (oa.is_scalar()) {
            if (oa.scalar != ob.scalar) return false;
        } else if (!structurally_equal(*oa.ct, *ob.ct)) {
            return false;
        }
    }
    return true;
}

// --- toy sealing backend ----------------------------------------------------

namespace {

class ToyBackend final : public SealBackend {
  public:
    void seal(const PublicKey& pk, Field m, Rng& rng, std::vector<std::uint8_t>& nonce,
              std::vector<std::uint8_t>& sealed) const override {
        nonce.resize((pk.rho + 7) / 8);
        rng.fill(nonce.data(), nonce.size());
        std::uint64_t k = rng.next_u64();
        Field c1 = f_pow(pk.g, k, pk.q);
        Field c2 = f_add(m, f_pow(pk.h, k, pk.q), pk.q);
        sealed.clear();
        bytes::put_u64_be(sealed, c1);
        bytes::put_u64_be(sealed, c2);
    }

    Field unseal(const SecretKey& sk, const std::vector<std::uint8_t>&,
                 const std::vector<std::uint8_t>& sealed) const override {
        if (sealed.size() != 16) throw CryptoError("malformed ciphertext: bad sealed block");
        Field c1 = 0, c2 = 0;
        for (int i = 0; i < 8; ++i) c1 = (c1 << 8) | sealed[static_cast<std::size_t>(i)];
        for (int i = 8; i < 16; ++i) c2 = (c2 << 8) | sealed[static_cast<std::size_t>(i)];
        return f_sub(c2, f_pow(c1, sk.s, sk.q), sk.q);
    }
};

}  // namespace

const SealBackend& toy_backend() {
    static ToyBackend backend;
    return backend;
}

CtPtr encrypt(const PublicKey& pk, Field m, Rng& rng, const SealBackend& backend) {
    if (m >= pk.q)
        throw CryptoError("plaintext " + std::to_string(m) + " not in [0, q)");
    Ciphertext::LeafData leaf;
    leaf.key_id = pk.key_id;
    backend.seal(pk, m, rng, leaf.nonce, leaf.sealed);
    return Ciphertext::make_leaf(std::move(leaf));
}

Field decrypt(const SecretKey& sk, const Ciphertext& ct, const SealBackend& backend) {
    Field q = sk.q;
    std::unordered_map<const Ciphertext*, Field> memo;
    std::vector<const Ciphertext*> stack{&ct};
    while (!stack.empty()) {
        const Ciphertext* n = stack.back();
        if (memo.count(n)) {
            stack.pop_back();
            continue;
        }
        if (n->is_leaf()) {
            if (n->leaf().key_id != sk.key_id)
                throw CryptoError("ciphertext sealed under key " +
                                  key_id_hex(n->leaf().key_id) + ", have key " +
                                  key_id_hex(sk.key_id));
            memo[n] = backend.unseal(sk, n->leaf().nonce, n->leaf().sealed);
            stack.pop_back();
            continue;
        }
        bool ready = true;
        for (const Operand* o : {&n->lhs(), &n->rhs()}) {
            if (o->ct && !memo.count(o->ct.get())) {
                stack.push_back(o->ct.get());
                ready = false;
            }
        }
        if (!ready) continue;
        auto value_of = [&](const Operand& o) {
            return o.is_scalar() ? o.scalar % q : memo[o.ct.get()];
        };
        Field a = value_of(n->lhs());
        Field b = value_of(n->rhs());
        Field v = 0;
        switch (n->op()) {
            case CtOp::Add: v = f_add(a, b, q); break;
            case CtOp::Sub: v = f_sub(a, b, q); break;
            case CtOp::Mul: v = f_mul(a, b, q); break;
            case CtOp::Pow:
                // Exponents are integer counts, not field elements: a public
                // scalar is used verbatim, an encrypted exponent contributes
                // its decrypted value.
                v = f_pow(a, n->rhs().is_scalar() ? n->rhs().scalar : b, q);
                break;
        }
        memo[n] = v;
        stack.pop_back();
    }
    return memo[&ct];
}

Field decrypt(const SecretKey& sk, const CtPtr& ct, const SealBackend& backend) {
    if (!ct) throw CryptoError("null ciphertext");
    return decrypt(sk, *ct, backend);
}

// --- serialization -----------------------------------------------------------
//
// ct      := node
// node    := 0x00 leaf | 0x01 inner | 0x02 backref(u32 BE)
// leaf    := key_id(16) nonce_len(u16 BE) nonce sealed_len(u16 BE) sealed
// inner   := op(u8) operand_count(u8 = 2) operand operand
// operand := node | 0x03 scalar(u64 BE)
//
// Node ids count every leaf/inner node in order of first emission; a repeated
// node is a backref, so shared subexpressions serialize once.

namespace {

constexpr std::uint8_t kTagLeaf = 0x00;
constexpr std::uint8_t kTagInner = 0x01;
constexpr std::uint8_t kTagBackref = 0x02;
constexpr std::uint8_t kTagScalar = 0x03;
constexpr std::size_t kMaxBlobLen = 4096;

[[noreturn]] void malformed(const std::string& why) {
    throw CryptoError("malformed ciphertext: " + why);
}

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    std::uint8_t u8() {
        if (pos + 1 > size) malformed("truncated");
        return data[pos++];
    }
    std::uint16_t u16() {
        if (pos + 2 > size) malformed("truncated");
        std::uint16_t v = static_cast<std::uint16_t>((data[pos] << 8) | data[pos + 1]);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | u8();
        return v;
    }
    std::vector<std::uint8_t> blob(std::size_t n) {
        if (pos + n > size) malformed("truncated");
        std::vector<std::uint8_t> out(data + pos, data + pos + n);
        pos += n;
        return out;
    }
};

}  // namespace

std::vector<std::uint8_t> serialize_ct(const Ciphertext& ct) {
    std::vector<std::uint8_t> out;
    std::unordered_map<const Ciphertext*, std::uint32_t> seen;
    struct Task {
        const Ciphertext* node;
        std::size_t operand;  // meaningful when emitting operands
        bool operands_phase;
    };
    std::vector<Task> tasks{{&ct, 0, false}};
    while (!tasks.empty()) {
        Task t = tasks.back();
        tasks.pop_back();
        if (!t.operands_phase) {
            auto it = seen.find(t.node);
            if (it != seen.end()) {
                out.push_back(kTagBackref);
                bytes::put_u32_be(out, it->second);
                continue;
            }
            seen[t.node] = static_cast<std::uint32_t>(seen.size());
            if (t.node->is_leaf()) {
                const auto& leaf = t.node->leaf();
                out.push_back(kTagLeaf);
                out.insert(out.end(), leaf.key_id.begin(), leaf.key_id.end());
                bytes::put_u16_be(out, static_cast<std::uint16_t>(leaf.nonce.size()));
                out.insert(out.end(), leaf.nonce.begin(), leaf.nonce.end());
                bytes::put_u16_be(out, static_cast<std::uint16_t>(leaf.sealed.size()));
                out.insert(out.end(), leaf.sealed.begin(), leaf.sealed.end());
                continue;
            }
            out.push_back(kTagInner);
            out.push_back(static_cast<std::uint8_t>(t.node->op()));
            out.push_back(2);
            tasks.push_back({t.node, 0, true});
        } else {
            if (t.operand == 2) continue;
            tasks.push_back({t.node, t.operand + 1, true});
            const Operand& o = t.operand == 0 ? t.node->lhs() : t.node->rhs();
            if (o.is_scalar()) {
                out.push_back(kTagScalar);
                bytes::put_u64_be(out, o.scalar);
            } else {
                tasks.push_back({o.ct.get(), 0, false});
            }
        }
    }
    return out;
}

std::vector<std::uint8_t> serialize_ct(const CtPtr& ct) {
    if (!ct) throw CryptoError("null ciphertext");
    return serialize_ct(*ct);
}

CtPtr deserialize_ct(const std::uint8_t* data, std::size_t size) {
    Reader r{data, size};
    std::vector<CtPtr> nodes;
    struct Frame {
        CtOp op;
        std::size_t slot;
        std::vector<Operand> collected;
    };
    std::vector<Frame> frames;
    CtPtr root;

    auto deliver = [&](Operand val) {
        while (true) {
            if (frames.empty()) {
                if (val.is_scalar()) malformed("top-level scalar");
                root = val.ct;
                return;
            }
            Frame& top = frames.back();
            top.collected.push_back(std::move(val));
            if (top.collected.size() < 2) return;
            CtPtr node;
            try {
                node = Ciphertext::make_node(top.op, top.collected[0], top.collected[1]);
            } catch (const CryptoError& e) {
                malformed(e.what());
            }
            nodes[top.slot] = node;
            frames.pop_back();
            val = Operand(node);
        }
    };

    while (!root) {
        std::uint8_t tag = r.u8();
        switch (tag) {
            case kTagLeaf: {
                Ciphertext::LeafData leaf;
                auto id = r.blob(16);
                std::memcpy(leaf.key_id.data(), id.data(), 16);
                std::size_t nonce_len = r.u16();
                if (nonce_len > kMaxBlobLen) malformed("nonce too long");
                leaf.nonce = r.blob(nonce_len);
                std::size_t sealed_len = r.u16();
                if (sealed_len > kMaxBlobLen) malformed("sealed block too long");
                leaf.sealed = r.blob(sealed_len);
                CtPtr ct = Ciphertext::make_leaf(std::move(leaf));
                nodes.push_back(ct);
                deliver(Operand(ct));
                break;
            }
            case kTagInner: {
                std::uint8_t op = r.u8();
                if (op > static_cast<std::uint8_t>(CtOp::Pow)) malformed("unknown op");
                if (r.u8() != 2) malformed("bad operand count");
                frames.push_back({static_cast<CtOp>(op), nodes.size(), {}});
                nodes.push_back(nullptr);
                break;
            }
            case kTagBackref: {
                std::uint32_t id = r.u32();
                if (id >= nodes.size() || !nodes[id]) malformed("bad back reference");
                deliver(Operand(nodes[id]));
                break;
            }
            case kTagScalar: {
                if (frames.empty()) malformed("top-level scalar");
                deliver(Operand(r.u64()));
                break;
            }
            default:
                malformed("unknown tag");
        }
    }
    if (r.pos != size) malformed("trailing bytes");
    return root;
}

CtPtr deserialize_ct(const std::vector<std::uint8_t>& data) {
    return deserialize_ct(data.data(), data.size());
}

}  // namespace psimc::he
