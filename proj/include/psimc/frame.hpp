#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "psimc/errors.hpp"
#include "psimc/limits.hpp"

namespace psimc::net {

enum class Role : std::uint8_t { A, B };

inline Role other(Role r) { return r == Role::A ? Role::B : Role::A; }
inline const char* role_name(Role r) { return r == Role::A ? "A" : "B"; }
Role parse_role(const std::string& name);

// Frame kinds. pubkey carries key material plus the config hash; ct carries
// one ciphertext; ct_vector an encrypted bit vector; ct_list a list of result
// ciphertexts; result a bare end-of-session marker (never a value); abort a
// human-readable reason.
namespace kind {
inline constexpr const char* kPubkey = "pubkey";
inline constexpr const char* kCt = "ct";
inline constexpr const char* kCtVector = "ct_vector";
inline constexpr const char* kCtList = "ct_list";
inline constexpr const char* kResult = "result";
inline constexpr const char* kAbort = "abort";
}  // namespace kind

bool known_kind(const std::string& kind);

struct Frame {
    int version = 1;
    std::uint64_t seq = 0;       // per sender, starting at 0
    Role from = Role::A;
    std::string kind;
    nlohmann::json body;

    bool operator==(const Frame& o) const {
        return version == o.version && seq == o.seq && from == o.from && kind == o.kind &&
               body == o.body;
    }
};

// Wire form: 4-byte big-endian payload length, then the UTF-8 JSON object
// {"v":1,"seq":n,"from":"A"|"B","kind":k,"body":...}. Payloads above the
// 64 MiB cap are rejected on both sides.
std::vector<std::uint8_t> encode_frame(const Frame& f);
Frame decode_frame(const std::uint8_t* data, std::size_t size);
Frame decode_frame(const std::vector<std::uint8_t>& data);

}  // namespace psimc::net
