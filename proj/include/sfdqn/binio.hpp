#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "sfdqn/errors.hpp"

namespace sfdqn {

// Explicit little-endian encoding keeps the on-disk formats byte-exact on any
// host. Doubles are serialized through their IEEE-754 bit pattern.

class BinaryWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }

    void put_u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

    void put_bytes(std::span<const unsigned char> bytes) {
        buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    }

    void put_bytes(const char* data, std::size_t n) {
        put_bytes(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(data), n));
    }

    const std::vector<unsigned char>& bytes() const { return buf_; }
    std::size_t size() const { return buf_.size(); }

private:
    std::vector<unsigned char> buf_;
};

// Bounds-checked reader over an in-memory file image. All failures report the
// byte offset where the read was attempted.
class BinaryReader {
public:
    explicit BinaryReader(std::vector<unsigned char> data) : data_(std::move(data)) {}

    std::uint8_t get_u8() {
        require(1);
        return data_[pos_++];
    }

    std::uint16_t get_u16() {
        require(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 2;
        return v;
    }

    std::uint32_t get_u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t get_u64() {
        require(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    double get_f64() { return std::bit_cast<double>(get_u64()); }

    void get_bytes(unsigned char* out, std::size_t n) {
        require(n);
        std::memcpy(out, data_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

    void fail(const std::string& msg) const { throw FormatError(msg, pos_); }

private:
    void require(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw FormatError("unexpected end of file", pos_);
        }
    }

    std::vector<unsigned char> data_;
    std::size_t pos_ = 0;
};

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path.string(), 0);
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return data;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open file for writing: " + path.string(), 0);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write: " + path.string(), 0);
}

}  // namespace sfdqn
