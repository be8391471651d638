#pragma once

// Little-endian binary file helpers shared by the checkpoint and the
// feature-sequence formats. Byte order is spelled out so files are
// portable regardless of host endianness.

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gestformer/errors.hpp"

namespace gestformer::binio {

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw InputError("cannot open for writing: " + path);
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }

    void u8(std::uint8_t v) { bytes(&v, 1); }

    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }

    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }

    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    void close() {
        out_.close();
        if (!out_) throw InputError("write failed: " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError("cannot open: " + path);
        in.seekg(0, std::ios::end);
        buf_.resize(static_cast<std::size_t>(in.tellg()));
        in.seekg(0);
        in.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!in) throw InputError("read failed: " + path);
    }

    void bytes(void* p, std::size_t n, const char* what) {
        if (pos_ + n > buf_.size()) {
            throw FormatError(path_ + ": truncated at byte " + std::to_string(pos_) +
                              " reading " + what + ": expected " + std::to_string(n) +
                              " more bytes, found " + std::to_string(buf_.size() - pos_));
        }
        std::copy(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n),
                  static_cast<unsigned char*>(p));
        pos_ += n;
    }

    std::uint8_t u8(const char* what) {
        std::uint8_t v;
        bytes(&v, 1, what);
        return v;
    }

    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        bytes(b, 4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    std::int32_t i32(const char* what) { return static_cast<std::int32_t>(u32(what)); }

    std::uint64_t u64(const char* what) {
        unsigned char b[8];
        bytes(b, 8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    std::int64_t i64(const char* what) { return static_cast<std::int64_t>(u64(what)); }

    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    std::string str(const char* what) {
        const std::uint32_t n = u32(what);
        std::string s(n, '\0');
        bytes(s.data(), n, what);
        return s;
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }
    const std::string& path() const { return path_; }

    void expect_end() {
        if (pos_ != buf_.size()) {
            throw FormatError(path_ + ": " + std::to_string(buf_.size() - pos_) +
                              " unexpected trailing bytes at byte " + std::to_string(pos_));
        }
    }

private:
    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
    std::string path_;
};

} // namespace gestformer::binio
