#pragma once

#include "podgp/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

// Little-endian binary readers/writers shared by the snapshot, basis,
// reduced-system and trajectory file formats.

namespace podgp {

namespace detail {

template <typename T>
T byteswap_value(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
        std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little)
        return v;
    else
        return byteswap_value(v);
}

} // namespace detail

class BinWriter {
public:
    explicit BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw validation_error("cannot open file for writing: " + path);
    }

    void magic(const char tag[4]) { out_.write(tag, 4); }
    void u32(std::uint32_t v) { raw(detail::to_little(v)); }
    void u64(std::uint64_t v) { raw(detail::to_little(v)); }
    void i32(std::int32_t v) { raw(detail::to_little(v)); }
    void f64(double v) { raw(detail::to_little(v)); }

    void f64_array(const double* p, std::size_t n) {
        if constexpr (std::endian::native == std::endian::little) {
            out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 8));
        } else {
            for (std::size_t i = 0; i < n; ++i) f64(p[i]);
        }
    }

    void close() {
        out_.close();
        if (!out_) throw validation_error("write failed: " + path_);
    }

private:
    template <typename T>
    void raw(T v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }

    std::string path_;
    std::ofstream out_;
};

class BinReader {
public:
    explicit BinReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw validation_error("cannot open file: " + path);
    }

    void expect_magic(const char tag[4], const char* what) {
        char buf[4] = {};
        in_.read(buf, 4);
        if (!in_ || std::memcmp(buf, tag, 4) != 0)
            throw validation_error(path_ + ": not a " + what + " file (bad magic)");
    }

    std::uint32_t u32() { return detail::to_little(raw<std::uint32_t>()); }
    std::uint64_t u64() { return detail::to_little(raw<std::uint64_t>()); }
    std::int32_t i32() { return detail::to_little(raw<std::int32_t>()); }
    double f64() { return detail::to_little(raw<double>()); }

    void f64_array(double* p, std::size_t n) {
        in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 8));
        check();
        if constexpr (std::endian::native != std::endian::little) {
            for (std::size_t i = 0; i < n; ++i) p[i] = detail::byteswap_value(p[i]);
        }
    }

    const std::string& path() const { return path_; }

private:
    template <typename T>
    T raw() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        check();
        return v;
    }

    void check() {
        if (!in_) throw validation_error(path_ + ": truncated or unreadable file");
    }

    std::string path_;
    std::ifstream in_;
};

} // namespace podgp
