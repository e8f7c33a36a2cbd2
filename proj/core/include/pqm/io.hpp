#pragma once

#include <cstdint>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "pqm/error.hpp"

// Little-endian binary primitives shared by the checkpoint and adapter
// file formats. Writers emit bytes explicitly so output does not depend
// on host endianness.

namespace pqm::io {

inline void write_u8(std::ostream& out, uint8_t v) {
    out.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void write_u64(std::ostream& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void write_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

inline void write_f32_array(std::ostream& out, const float* v, size_t n) {
    for (size_t i = 0; i < n; ++i) write_f32(out, v[i]);
}

inline void write_bytes(std::ostream& out, const uint8_t* v, size_t n) {
    out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n));
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline uint8_t read_u8(std::istream& in) {
    int c = in.get();
    if (c == EOF) throw Error::corrupt("unexpected end of file");
    return static_cast<uint8_t>(c);
}

inline uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(read_u8(in)) << (8 * i);
    return v;
}

inline uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(read_u8(in)) << (8 * i);
    return v;
}

inline float read_f32(std::istream& in) {
    uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void read_f32_array(std::istream& in, float* v, size_t n) {
    for (size_t i = 0; i < n; ++i) v[i] = read_f32(in);
}

inline std::vector<uint8_t> read_bytes(std::istream& in, size_t n) {
    std::vector<uint8_t> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw Error::corrupt("unexpected end of file");
    return buf;
}

inline std::string read_string(std::istream& in) {
    uint32_t n = read_u32(in);
    if (n > (1u << 20)) throw Error::corrupt("implausible string length");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (static_cast<size_t>(in.gcount()) != n)
        throw Error::corrupt("unexpected end of file");
    return s;
}

}  // namespace pqm::io
