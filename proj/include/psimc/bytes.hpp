#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace psimc::bytes {

std::string to_hex(const std::uint8_t* data, std::size_t n);
std::string to_hex(const std::vector<std::uint8_t>& data);
std::vector<std::uint8_t> from_hex(std::string_view hex);

std::string base64_encode(const std::uint8_t* data, std::size_t n);
std::string base64_encode(const std::vector<std::uint8_t>& data);
std::vector<std::uint8_t> base64_decode(std::string_view text);

void put_u16_be(std::vector<std::uint8_t>& out, std::uint16_t v);
void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64_be(std::vector<std::uint8_t>& out, std::uint64_t v);

}  // namespace psimc::bytes
