#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "psimc/errors.hpp"

// Homomorphic encryption emulation.
//
// Leaves are sealed under a toy probabilistic public-key scheme; homomorphic
// operations build expression nodes instead of acting on sealed bytes.
// Decryption unseals the leaves and evaluates the expression bottom-up in
// Z_q. The construction is deliberately NOT secure against a real adversary;
// it exists so that protocols have the exact information-flow shape of an
// FHE deployment (who can read what, what travels encrypted) while staying
// exact over the finite field. The sealing backend sits behind an interface
// so a real scheme can replace it without touching protocol code.
namespace psimc::he {

using Field = std::uint64_t;

// 2^61 - 1, a Mersenne prime.
inline constexpr Field kDefaultModulus = 2305843009213693951ull;

// --- field helpers ---------------------------------------------------------

Field f_add(Field a, Field b, Field q);
Field f_sub(Field a, Field b, Field q);
Field f_mul(Field a, Field b, Field q);
// 0^0 = 1 by convention.
Field f_pow(Field base, std::uint64_t exp, Field q);

bool is_prime_u64(std::uint64_t n);

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }
    // Uniform in [lo, hi], inclusive.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);
    void fill(std::uint8_t* out, std::size_t n);

  private:
    std::mt19937_64 eng_;
};

// Uniform-ish prime in [lo, hi) by rejection sampling.
Field random_prime(Rng& rng, Field lo, Field hi);

// --- keys ------------------------------------------------------------------

struct SchemeParams {
    unsigned rho = 64;            // bits of nonce entropy, at least 64
    Field q = kDefaultModulus;    // prime plaintext modulus

    void validate() const;
};

using KeyId = std::array<std::uint8_t, 16>;

std::string key_id_hex(const KeyId& id);

struct PublicKey {
    KeyId key_id{};
    Field q = 0;
    Field g = 0;
    Field h = 0;   // g^s
    unsigned rho = 0;
};

struct SecretKey {
    KeyId key_id{};
    Field q = 0;
    Field s = 0;
};

struct KeyPair {
    PublicKey pub;
    SecretKey sec;
};

// Fresh key pair; the key id is unique within the process even when two
// calls share a seed.
KeyPair keygen(const SchemeParams& params, Rng& rng);

// --- ciphertexts -----------------------------------------------------------

enum class CtOp : std::uint8_t { Add = 0, Sub = 1, Mul = 2, Pow = 3 };

class Ciphertext;
using CtPtr = std::shared_ptr<const Ciphertext>;

// Either a ciphertext or a public scalar constant. Scalars that are private
// to a party must never travel this way; encrypt them instead.
struct Operand {
    Operand(CtPtr c) : ct(std::move(c)) {}
    Operand(Field v) : scalar(v) {}
    Operand(int v) : scalar(static_cast<Field>(v)) {}

    bool is_scalar() const { return ct == nullptr; }

    CtPtr ct;
    Field scalar = 0;
};

// Immutable expression DAG node: a sealed leaf or an operation over two
// operands. Repeated operands share structure; serialization preserves the
// sharing with back references.
class Ciphertext {
  public:
    struct LeafData {
        KeyId key_id{};
        std::vector<std::uint8_t> nonce;
        std::vector<std::uint8_t> sealed;
    };

    static CtPtr make_leaf(LeafData leaf);
    static CtPtr make_node(CtOp op, Operand a, Operand b);

    bool is_leaf() const { return leaf_ != nullptr; }
    const LeafData& leaf() const { return *leaf_; }
    CtOp op() const { return op_; }
    const Operand& lhs() const { return operands_[0]; }
    const Operand& rhs() const { return operands_[1]; }
    // For nodes the id is inherited from the ciphertext operands.
    const KeyId& key_id() const { return key_id_; }

  private:
    Ciphertext() = default;

    std::unique_ptr<LeafData> leaf_;
    CtOp op_ = CtOp::Add;
    std::vector<Operand> operands_;
    KeyId key_id_{};
};

// At least one operand of add/sub/mul must be a ciphertext; two ciphertext
// operands must share a key id.
CtPtr ct_add(const Operand& a, const Operand& b);
CtPtr ct_sub(const Operand& a, const Operand& b);
CtPtr ct_mul(const Operand& a, const Operand& b);
// base^exponent; the base must be a ciphertext, the exponent may be a public
// scalar or a ciphertext.
CtPtr ct_pow(const CtPtr& base, const Operand& exponent);

// Distinct operation nodes in the DAG (excludes leaves). Never exceeds the
// number of homomorphic operations that built the ciphertext.
std::size_t op_node_count(const Ciphertext& ct);
// Distinct vertices including leaves.
std::size_t total_node_count(const Ciphertext& ct);

bool structurally_equal(const Ciphertext& a, const Ciphertext& b);

// --- sealing backend -------------------------------------------------------

class SealBackend {
  public:
    virtual ~SealBackend() = default;
    virtual void seal(const PublicKey& pk, Field m, Rng& rng,
                      std::vector<std::uint8_t>& nonce,
                      std::vector<std::uint8_t>& sealed) const = 0;
    virtual Field unseal(const SecretKey& sk, const std::vector<std::uint8_t>& nonce,
                         const std::vector<std::uint8_t>& sealed) const = 0;
};

// ElGamal-flavoured toy: sealed bytes are (g^k, m + h^k) in Z_q with a fresh
// random exponent k per encryption, plus a rho-bit nonce for uniqueness.
const SealBackend& toy_backend();

// --- encrypt / decrypt / serialize -----------------------------------------

// Requires 0 <= m < q. Every call draws fresh randomness, so equal plaintexts
// produce different bytes.
CtPtr encrypt(const PublicKey& pk, Field m, Rng& rng,
              const SealBackend& backend = toy_backend());

// Unseals every leaf (all must carry sk's key id) and evaluates the
// expression bottom-up in Z_q. Safe for very deep chains.
Field decrypt(const SecretKey& sk, const Ciphertext& ct,
              const SealBackend& backend = toy_backend());
Field decrypt(const SecretKey& sk, const CtPtr& ct,
              const SealBackend& backend = toy_backend());

// Canonical byte encoding; see docs/wire-format.md. Leaves round-trip
// byte-identically, shared nodes are emitted once.
std::vector<std::uint8_t> serialize_ct(const Ciphertext& ct);
std::vector<std::uint8_t> serialize_ct(const CtPtr& ct);
CtPtr deserialize_ct(const std::uint8_t* data, std::size_t size);
CtPtr deserialize_ct(const std::vector<std::uint8_t>& data);

}  // namespace psimc::he
