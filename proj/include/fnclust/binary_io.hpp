#pragma once

// Little-endian byte buffers for the FNC* file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "fnclust/error.hpp"

namespace fnclust::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void magic(std::string_view m, bool nul_terminated) {
        bytes(m.data(), m.size());
        if (nul_terminated) u8(0);
    }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f32(float v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }

    const std::vector<unsigned char>& data() const noexcept { return buf_; }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + path + " for writing");
        out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw Error("write failed: " + path);
    }

private:
    std::vector<unsigned char> buf_;
};

class Reader {
public:
    explicit Reader(std::vector<unsigned char> data) : buf_(std::move(data)) {}

    static Reader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open " + path);
        std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return Reader(std::move(data));
    }

    void expect_magic(std::string_view m, bool nul_terminated, const char* format) {
        need(m.size() + (nul_terminated ? 1 : 0), format);
        if (std::memcmp(buf_.data() + pos_, m.data(), m.size()) != 0 || (nul_terminated && buf_[pos_ + m.size()] != 0))
            throw FormatError(std::string(format) + ": bad magic", pos_);
        pos_ += m.size() + (nul_terminated ? 1 : 0);
    }
    std::uint8_t u8(const char* f) { return get<std::uint8_t>(f); }
    std::uint32_t u32(const char* f) { return get<std::uint32_t>(f); }
    std::uint64_t u64(const char* f) { return get<std::uint64_t>(f); }
    float f32(const char* f) { return get<float>(f); }
    double f64(const char* f) { return get<double>(f); }

    /// Throws unless exactly `n` bytes remain.
    void expect_remaining(std::size_t n, const char* format) const {
        if (remaining() < n) throw FormatError(std::string(format) + ": truncated payload", buf_.size());
        if (remaining() > n) throw FormatError(std::string(format) + ": trailing bytes", pos_ + n);
    }
    void expect_end(const char* format) const {
        if (remaining() != 0) throw FormatError(std::string(format) + ": trailing bytes", pos_);
    }

    std::size_t remaining() const noexcept { return buf_.size() - pos_; }
    std::size_t offset() const noexcept { return pos_; }

private:
    void need(std::size_t n, const char* format) const {
        if (remaining() < n) throw FormatError(std::string(format) + ": truncated payload", buf_.size());
    }
    template <class T>
    T get(const char* format) {
        need(sizeof(T), format);
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
};

}  // namespace fnclust::io
