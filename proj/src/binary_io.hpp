#pragma once

// Little-endian encoding helpers shared by the checkpoint and dataset formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "phemonet/errors.hpp"

namespace phemonet::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    template <typename T>
    void put(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }

    void u8(std::uint8_t v) { put(v); }
    void u16(std::uint16_t v) { put(v); }
    void u32(std::uint32_t v) { put(v); }
    void f32(float v) { put(v); }
    void f64(double v) { put(v); }

    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
    std::vector<std::uint8_t> take() && { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return buf_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == buf_.size(); }

    void expect_magic(std::string_view magic, const char* what) {
        need(magic.size(), what);
        if (std::memcmp(buf_.data() + pos_, magic.data(), magic.size()) != 0) {
            throw FormatError(std::string("bad magic, expected \"") + std::string(magic) + "\" for " + what, pos_);
        }
        pos_ += magic.size();
    }

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::uint8_t u8(const char* what) { return get<std::uint8_t>(what); }
    std::uint16_t u16(const char* what) { return get<std::uint16_t>(what); }
    std::uint32_t u32(const char* what) { return get<std::uint32_t>(what); }
    float f32(const char* what) { return get<float>(what); }
    double f64(const char* what) { return get<double>(what); }

    std::string string(std::size_t len, const char* what) {
        need(len, what);
        std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    /// Fails unless count elements of elem_size bytes remain.
    void need_elements(std::size_t count, std::size_t elem_size, const char* what) {
        if (elem_size != 0 && count > remaining() / elem_size) {
            throw FormatError(std::string("truncated ") + what + ": need " + std::to_string(count) + " x " +
                                  std::to_string(elem_size) + " bytes, " + std::to_string(remaining()) + " remain",
                              pos_);
        }
    }

private:
    void need(std::size_t n, const char* what) {
        if (n > remaining()) throw FormatError(std::string("truncated while reading ") + what, pos_);
    }

    const std::vector<std::uint8_t>& buf_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace phemonet::detail
