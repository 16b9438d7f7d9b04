#include "edgy/address.hpp"

#include <arpa/inet.h>

#include <cstdio>
#include <cstring>

namespace edgy {

Address128 Address128::from_bytes(const std::array<std::uint8_t, 16>& b) {
    Address128 a;
    for (int i = 0; i < 8; ++i) a.hi = (a.hi << 8) | b[static_cast<std::size_t>(i)];
    for (int i = 8; i < 16; ++i) a.lo = (a.lo << 8) | b[static_cast<std::size_t>(i)];
    return a;
}

std::array<std::uint8_t, 16> Address128::to_bytes() const {
    std::array<std::uint8_t, 16> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(8 + i)] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
    return b;
}

Address128 Address128::masked(int prefix_len) const {
    if (prefix_len <= 0) return {};
    if (prefix_len >= 128) return *this;
    Address128 r = *this;
    if (prefix_len <= 64) {
        r.lo = 0;
        if (prefix_len < 64) r.hi &= ~0ULL << (64 - prefix_len);
    } else {
        r.lo &= ~0ULL << (128 - prefix_len);
    }
    return r;
}

Address128 parse_address(std::string_view text) {
    // Reject anything inet_pton would not, but report a position.
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') ||
                  (c >= 'A' && c <= 'F') || c == ':' || c == '.';
        if (!ok)
            throw AddressParseError("invalid character '" + std::string(1, c) +
                                        "' in IPv6 address at position " + std::to_string(i),
                                    i);
    }
    std::string buf(text);
    std::array<std::uint8_t, 16> bytes{};
    if (inet_pton(AF_INET6, buf.c_str(), bytes.data()) != 1)
        throw AddressParseError("malformed IPv6 address '" + buf + "' at position 0", 0);
    return Address128::from_bytes(bytes);
}

std::string format_address(const Address128& a) {
    auto bytes = a.to_bytes();
    char buf[INET6_ADDRSTRLEN];
    if (!inet_ntop(AF_INET6, bytes.data(), buf, sizeof buf))
        throw std::runtime_error("inet_ntop failed");
    return buf;
}

std::string format_mac(const MacAddress& m) {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", m.octets[0], m.octets[1],
                  m.octets[2], m.octets[3], m.octets[4], m.octets[5]);
    return buf;
}

InterfaceId mac_to_eui64(const MacAddress& mac) {
    std::uint64_t v = 0;
    v |= static_cast<std::uint64_t>(mac.octets[0] ^ 0x02) << 56;
    v |= static_cast<std::uint64_t>(mac.octets[1]) << 48;
    v |= static_cast<std::uint64_t>(mac.octets[2]) << 40;
    v |= 0xffULL << 32;
    v |= 0xfeULL << 24;
    v |= static_cast<std::uint64_t>(mac.octets[3]) << 16;
    v |= static_cast<std::uint64_t>(mac.octets[4]) << 8;
    v |= static_cast<std::uint64_t>(mac.octets[5]);
    return {v};
}

std::optional<MacAddress> eui64_to_mac(const InterfaceId& iid) {
    if (!is_eui64(iid)) return std::nullopt;
    MacAddress m;
    m.octets[0] = static_cast<std::uint8_t>((iid.low64 >> 56) ^ 0x02);
    m.octets[1] = static_cast<std::uint8_t>(iid.low64 >> 48);
    m.octets[2] = static_cast<std::uint8_t>(iid.low64 >> 40);
    m.octets[3] = static_cast<std::uint8_t>(iid.low64 >> 16);
    m.octets[4] = static_cast<std::uint8_t>(iid.low64 >> 8);
    m.octets[5] = static_cast<std::uint8_t>(iid.low64);
    return m;
}

Prefix::Prefix(const Address128& b, int len) : base(b.masked(len)), length(len) {
    if (len < 0 || len > 128)
        throw std::invalid_argument("prefix length " + std::to_string(len) + " out of [0,128]");
}

bool Prefix::contains(const Address128& a) const { return a.masked(length) == base; }

Prefix parse_prefix(std::string_view text) {
    auto slash = text.rfind('/');
    if (slash == std::string_view::npos)
        throw AddressParseError("missing '/' in prefix '" + std::string(text) + "'", text.size());
    Address128 base = parse_address(text.substr(0, slash));
    int len = 0;
    auto digits = text.substr(slash + 1);
    if (digits.empty() || digits.size() > 3)
        throw AddressParseError("bad prefix length in '" + std::string(text) + "'", slash + 1);
    for (char c : digits) {
        if (c < '0' || c > '9')
            throw AddressParseError("bad prefix length in '" + std::string(text) + "'", slash + 1);
        len = len * 10 + (c - '0');
    }
    if (len > 128)
        throw AddressParseError("prefix length " + std::to_string(len) + " out of range", slash + 1);
    return Prefix(base, len);
}

std::string format_prefix(const Prefix& p) {
    return format_address(p.base) + "/" + std::to_string(p.length);
}

int matching_msb(const Address128& a, const Address128& b) {
    std::uint64_t x = a.hi ^ b.hi;
    if (x != 0) return __builtin_clzll(x);
    x = a.lo ^ b.lo;
    if (x != 0) return 64 + __builtin_clzll(x);
    return 128;
}

Prefix subnet_id(const Address128& a, int length) {
    if (length < 0 || length > 128)
        throw std::invalid_argument("subnet length " + std::to_string(length) + " out of [0,128]");
    return Prefix(a, length);
}

} // namespace edgy
