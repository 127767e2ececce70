#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "boxlab/errors.hpp"

namespace boxlab {

// Single-file container of named typed arrays plus a small metadata block.
// Layout: 8-byte magic, u64 header length, JSON header (array directory +
// metadata), then the raw little-endian payload. All on-disk floats are f32.
class ArrayContainer {
public:
    enum class Dtype { F32, F64, I32, U8 };

    struct Entry {
        std::string name;
        Dtype dtype;
        std::vector<std::size_t> shape;
        std::variant<std::vector<float>, std::vector<double>, std::vector<std::int32_t>,
                     std::vector<std::uint8_t>>
            data;
    };

    void put_f32(const std::string& name, std::vector<float> data, std::vector<std::size_t> shape);
    void put_f64(const std::string& name, std::vector<double> data, std::vector<std::size_t> shape);
    void put_i32(const std::string& name, std::vector<std::int32_t> data, std::vector<std::size_t> shape);
    void put_u8(const std::string& name, std::vector<std::uint8_t> data, std::vector<std::size_t> shape);

    bool has(const std::string& name) const;
    const std::vector<float>& f32(const std::string& name) const;
    const std::vector<double>& f64(const std::string& name) const;
    const std::vector<std::int32_t>& i32(const std::string& name) const;
    const std::vector<std::uint8_t>& u8(const std::string& name) const;
    const std::vector<std::size_t>& shape(const std::string& name) const;
    std::vector<std::string> names() const;

    std::map<std::string, std::string>& metadata() { return metadata_; }
    const std::map<std::string, std::string>& metadata() const { return metadata_; }
    std::string meta_or(const std::string& key, const std::string& fallback) const;

    void save(const std::filesystem::path& path) const;
    static ArrayContainer load(const std::filesystem::path& path);

private:
    const Entry& entry(const std::string& name) const;
    Entry& upsert(const std::string& name, Dtype dtype, std::vector<std::size_t> shape);

    std::vector<Entry> entries_;
    std::map<std::string, std::string> metadata_;
};

// Row-major matrix bridging; doubles in memory, f32 on disk.
Eigen::MatrixXd get_matrix(const ArrayContainer& c, const std::string& name);
void put_matrix(ArrayContainer& c, const std::string& name, const Eigen::MatrixXd& m);

// Lossless f64 variant, used by checkpoints.
Eigen::MatrixXd get_matrix64(const ArrayContainer& c, const std::string& name);
void put_matrix64(ArrayContainer& c, const std::string& name, const Eigen::MatrixXd& m);

std::vector<int> get_ivec(const ArrayContainer& c, const std::string& name);
void put_ivec(ArrayContainer& c, const std::string& name, const std::vector<int>& v);

} // namespace boxlab
