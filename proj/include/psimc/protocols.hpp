#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psimc/channel.hpp"
#include "psimc/he.hpp"
#include "psimc/logic.hpp"
#include "psimc/transcript.hpp"

namespace psimc::smpc {

namespace proto {
inline constexpr const char* kAlg1 = "alg1";
inline constexpr const char* kAlg1Binary = "alg1_binary";
inline constexpr const char* kAlg2 = "alg2";
inline constexpr const char* kAlg3 = "alg3";
inline constexpr const char* kAlg4 = "alg4";
inline constexpr const char* kPsi = "psi";
}  // namespace proto

// Both parties must construct identical configs; the pubkey frame carries a
// hash of the parts that have to agree and role B aborts on mismatch.
struct SessionConfig {
    logic::Signature signature;
    he::SchemeParams params;
    std::uint64_t seed = 0;
    bool symmetric = false;
    std::size_t max_atoms = limits::kDefaultMaxAtoms;
    std::chrono::milliseconds recv_timeout = net::kDefaultRecvTimeout;
};

std::string config_hash(const SessionConfig& cfg, const std::string& protocol);

struct ProtocolOutcome {
    std::string protocol;
    net::Role role = net::Role::A;        // caller's role in the primary pass
    std::optional<std::uint64_t> result;  // set iff the caller held the keys in some pass
    net::Counters counters;               // caller's primary-pass counters
    std::shared_ptr<net::Transcript> transcript;
    std::shared_ptr<net::Transcript> symmetric_transcript;  // second pass, roles swapped
};

// Role A holds the key pair and learns the result; role B contributes its
// private input encrypted under A's public key. With cfg.symmetric set, the
// whole protocol runs a second time with the roles swapped so that both
// callers end with a result.

// Hamming distance between the two private interpretations.
ProtocolOutcome run_alg1(net::Channel& ch, net::Role role, const SessionConfig& cfg,
                         const logic::Interpretation& w);

// 0 when some index carries a 1 in both private bit sequences, 1 otherwise.
ProtocolOutcome run_alg1_binary(net::Channel& ch, net::Role role, const SessionConfig& cfg,
                                const logic::BitSequence& bits);

// Drastic inconsistency of the union of the two private KBs. Refuses to start
// (InputError, before any frame) when the caller's own KB is inconsistent.
ProtocolOutcome run_alg2(net::Channel& ch, net::Role role, const SessionConfig& cfg,
                         const logic::KnowledgeBase& kb);

// Minimum pairwise Hamming distance between the private model lists; an upper
// bound for the contension of the union.
ProtocolOutcome run_alg3(net::Channel& ch, net::Role role, const SessionConfig& cfg,
                         const std::vector<logic::Interpretation>& models);

// Same value as run_alg3, but A sends a cyclically padded list of 2^|At|
// models so B cannot count A's models, and B meta-encrypts the result list so
// A only learns the minimum, not the distance multiset.
ProtocolOutcome run_alg4(net::Channel& ch, net::Role role, const SessionConfig& cfg,
                         const std::vector<logic::Interpretation>& models);

// Singleton private-set-intersection: result 1 when the two private field
// elements are equal, else 0 (A's decrypted probe stays blinded).
ProtocolOutcome run_psi_singleton(net::Channel& ch, net::Role role, const SessionConfig& cfg,
                                  std::uint64_t value);

// Runs the two role closures over an in-process channel pair, role B on a
// second thread. If one side fails its endpoint is torn down so the other
// side unblocks; the first error (A's preferred) is rethrown.
struct PairOutcome {
    ProtocolOutcome a;
    ProtocolOutcome b;
};

using RoleRunner = std::function<ProtocolOutcome(net::Channel&, net::Role)>;

PairOutcome run_pair_memory(const RoleRunner& runner);

}  // namespace psimc::smpc
