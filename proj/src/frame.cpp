#include "psimc/frame.hpp"

namespace psimc::net {

Role parse_role(const std::string& name) {
    if (name == "A") return Role::A;
    if (name == "B") return Role::B;
    throw ProtocolError("unknown role '" + name + "'");
}

bool known_kind(const std::string& kind) {
    return kind == kind::kPubkey || kind == kind::kCt || kind == kind::kCtVector ||
           kind == kind::kCtList || kind == kind::kResult || kind == kind::kAbort;
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (!known_kind(f.kind)) throw ProtocolError("unknown frame kind '" + f.kind + "'");
    nlohmann::json j{
        {"v", f.version}, {"seq", f.seq}, {"from", role_name(f.from)},
        {"kind", f.kind}, {"body", f.body},
    };
    std::string payload = j.dump();
    if (payload.size() > limits::kMaxFrameBytes)
        throw ChannelError("frame of " + std::to_string(payload.size()) +
                           " bytes exceeds the 64 MiB cap");
    std::vector<std::uint8_t> out;
    out.reserve(4 + payload.size());
    auto len = static_cast<std::uint32_t>(payload.size());
    out.push_back(static_cast<std::uint8_t>(len >> 24));
    out.push_back(static_cast<std::uint8_t>(len >> 16));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Frame decode_frame(const std::uint8_t* data, std::size_t size) {
    if (size < 4) throw ChannelError("truncated frame header");
    std::uint32_t len = (static_cast<std::uint32_t>(data[0]) << 24) |
                        (static_cast<std::uint32_t>(data[1]) << 16) |
                        (static_cast<std::uint32_t>(data[2]) << 8) |
                        static_cast<std::uint32_t>(data[3]);
    if (len > limits::kMaxFrameBytes)
        throw ChannelError("frame of " + std::to_string(len) + " bytes exceeds the 64 MiB cap");
    if (size != 4 + static_cast<std::size_t>(len)) throw ChannelError("frame length mismatch");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(data + 4, data + size);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("bad frame payload: ") + e.what());
    }
    Frame f;
    try {
        f.version = j.at("v").get<int>();
        f.seq = j.at("seq").get<std::uint64_t>();
        f.from = parse_role(j.at("from").get<std::string>());
        f.kind = j.at("kind").get<std::string>();
        f.body = j.at("body");
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("bad frame fields: ") + e.what());
    }
    if (f.version != 1) throw ProtocolError("unsupported frame version " + std::to_string(f.version));
    if (!known_kind(f.kind)) throw ProtocolError("unknown frame kind '" + f.kind + "'");
    return f;
}

Frame decode_frame(const std::vector<std::uint8_t>& data) {
    return decode_frame(data.data(), data.size());
}

}  // namespace psimc::net
