#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace edgy {

/// Exact 128-bit IPv6 address. Bit 0 is the most significant bit of the
/// first (network-order) byte.
struct Address128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    friend auto operator<=>(const Address128&, const Address128&) = default;

    static Address128 from_bytes(const std::array<std::uint8_t, 16>& b);
    std::array<std::uint8_t, 16> to_bytes() const;

    /// Value shifted so that the top `n` bits are kept and the rest zeroed.
    Address128 masked(int prefix_len) const;

    Address128 operator|(const Address128& o) const { return {hi | o.hi, lo | o.lo}; }
    Address128 operator&(const Address128& o) const { return {hi & o.hi, lo & o.lo}; }
    Address128 operator^(const Address128& o) const { return {hi ^ o.hi, lo ^ o.lo}; }

    /// 128-bit addition, wrapping.
    Address128 operator+(const Address128& o) const {
        Address128 r{hi + o.hi, lo + o.lo};
        if (r.lo < lo) ++r.hi;
        return r;
    }
    Address128 operator-(const Address128& o) const {
        Address128 r{hi - o.hi, lo - o.lo};
        if (lo < o.lo) --r.hi;
        return r;
    }

    bool is_zero() const { return hi == 0 && lo == 0; }
};

struct AddressParseError : std::runtime_error {
    std::size_t position;
    AddressParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg), position(pos) {}
};

/// Parses full or compressed textual IPv6 form. Throws AddressParseError
/// naming the offending position on malformed input.
Address128 parse_address(std::string_view text);

/// Canonical lowercase, maximally compressed form (RFC 5952).
std::string format_address(const Address128& a);

///// Interface identifier: the low 64 bits of an address.
struct InterfaceId {
    std::uint64_t low64 = 0;
    friend auto operator<=>(const InterfaceId&, const InterfaceId&) = default;
};

inline InterfaceId iid_of(const Address128& a) { return {a.lo}; }

struct MacAddress {
    std::array<std::uint8_t, 6> octets{};
    friend auto operator<=>(const MacAddress&, const MacAddress&) = default;
};

std::string format_mac(const MacAddress& m);

///// Inserts ff:fe between octets 3 and 4 and flips the universal/local bit.
InterfaceId mac_to_eui64(const MacAddress& mac);

/// Inverse of mac_to_eui64; nullopt unless IID bytes 4-5 are ff:fe.
std::optional<MacAddress> eui64_to_mac(const InterfaceId& iid);

inline bool is_eui64(const InterfaceId& iid) {
    return ((iid.low64 >> 24) & 0xffff) == 0xfffe;
}

/// CIDR prefix stored canonically: bits below `length` are zero.
struct Prefix {
    Address128 base;
    int length = 0;

    Prefix() = default;
    Prefix(const Address128& b, int len);

    bool contains(const Address128& a) const;
    bool contains(const Prefix& p) const {
        return p.length >= length && contains(p.base);
    }

    friend auto operator<=>(const Prefix&, const Prefix&) = default;
};

/// Parses "addr/len"; throws AddressParseError on malformed input.
Prefix parse_prefix(std::string_view text);
std::string format_prefix(const Prefix& p);

/// Length of the longest common most-significant-bit run; 128 iff a == b.
int matching_msb(const Address128& a, const Address128& b);

/// Canonical prefix of the given length containing a. Throws
/// std::invalid_argument for length outside [0,128].
Prefix subnet_id(const Address128& a, int length);

struct Address128Hash {
    std::size_t operator()(const Address128& a) const {
        std::uint64_t x = a.hi * 0x9e3779b97f4a7c15ULL ^ a.lo;
        x ^= x >> 31;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 29;
        return static_cast<std::size_t>(x);
    }
};

struct PrefixHash {
    std::size_t operator()(const Prefix& p) const {
        return Address128Hash{}(p.base) ^ (static_cast<std::size_t>(p.length) << 1);
    }
};

struct MacHash {
    std::size_t operator()(const MacAddress& m) const {
        std::uint64_t v = 0;
        for (auto o : m.octets) v = (v << 8) | o;
        return std::hash<std::uint64_t>{}(v);
    }
};

} // namespace edgy
