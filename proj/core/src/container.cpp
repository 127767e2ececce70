#include "boxlab/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little, "container i/o assumes a little-endian host");

namespace boxlab {

namespace {

constexpr char kMagic[8] = {'B', 'X', 'L', 'C', 'O', 'N', 'T', '1'};

std::size_t shape_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

const char* dtype_name(ArrayContainer::Dtype d) {
    switch (d) {
    case ArrayContainer::Dtype::F32: return "f32";
    case ArrayContainer::Dtype::F64: return "f64";
    case ArrayContainer::Dtype::I32: return "i32";
    case ArrayContainer::Dtype::U8: return "u8";
    }
    return "?";
}

ArrayContainer::Dtype dtype_from(const std::string& s, const std::string& ctx) {
    if (s == "f32") return ArrayContainer::Dtype::F32;
    if (s == "f64") return ArrayContainer::Dtype::F64;
    if (s == "i32") return ArrayContainer::Dtype::I32;
    if (s == "u8") return ArrayContainer::Dtype::U8;
    throw ParseError("container: unknown dtype '" + s + "' for array '" + ctx + "'");
}

std::size_t dtype_size(ArrayContainer::Dtype d) {
    switch (d) {
    case ArrayContainer::Dtype::F32: return 4;
    case ArrayContainer::Dtype::F64: return 8;
    case ArrayContainer::Dtype::I32: return 4;
    case ArrayContainer::Dtype::U8: return 1;
    }
    return 0;
}

} // namespace

ArrayContainer::Entry& ArrayContainer::upsert(const std::string& name, Dtype dtype,
                                              std::vector<std::size_t> shape) {
    for (auto& e : entries_) {
        if (e.name == name) {
            e.dtype = dtype;
            e.shape = std::move(shape);
            return e;
        }
    }
    entries_.push_back(Entry{name, dtype, std::move(shape), {}});
    return entries_.back();
}

void ArrayContainer::put_f32(const std::string& name, std::vector<float> data,
                             std::vector<std::size_t> shape) {
    if (data.size() != shape_count(shape))
        throw ValidationError("container: array '" + name + "' data size does not match shape");
    upsert(name, Dtype::F32, std::move(shape)).data = std::move(data);
}

void ArrayContainer::put_f64(const std::string& name, std::vector<double> data,
                             std::vector<std::size_t> shape) {
    if (data.size() != shape_count(shape))
        throw ValidationError("container: array '" + name + "' data size does not match shape");
    upsert(name, Dtype::F64, std::move(shape)).data = std::move(data);
}

void ArrayContainer::put_i32(const std::string& name, std::vector<std::int32_t> data,
                             std::vector<std::size_t> shape) {
    if (data.size() != shape_count(shape))
        throw ValidationError("container: array '" + name + "' data size does not match shape");
    upsert(name, Dtype::I32, std::move(shape)).data = std::move(data);
}

void ArrayContainer::put_u8(const std::string& name, std::vector<std::uint8_t> data,
                            std::vector<std::size_t> shape) {
    if (data.size() != shape_count(shape))
        throw ValidationError("container: array '" + name + "' data size does not match shape");
    upsert(name, Dtype::U8, std::move(shape)).data = std::move(data);
}

const ArrayContainer::Entry& ArrayContainer::entry(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw ParseError("container: missing array '" + name + "'");
}

bool ArrayContainer::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const std::vector<float>& ArrayContainer::f32(const std::string& name) const {
    const Entry& e = entry(name);
    if (e.dtype != Dtype::F32)
        throw ParseError("container: array '" + name + "' is " + dtype_name(e.dtype) + ", expected f32");
    return std::get<std::vector<float>>(e.data);
}

const std::vector<double>& ArrayContainer::f64(const std::string& name) const {
    const Entry& e = entry(name);
    if (e.dtype != Dtype::F64)
        throw ParseError("container: array '" + name + "' is " + dtype_name(e.dtype) + ", expected f64");
    return std::get<std::vector<double>>(e.data);
}

const std::vector<std::int32_t>& ArrayContainer::i32(const std::string& name) const {
    const Entry& e = entry(name);
    if (e.dtype != Dtype::I32)
        throw ParseError("container: array '" + name + "' is " + dtype_name(e.dtype) + ", expected i32");
    return std::get<std::vector<std::int32_t>>(e.data);
}

const std::vector<std::uint8_t>& ArrayContainer::u8(const std::string& name) const {
    const Entry& e = entry(name);
    if (e.dtype != Dtype::U8)
        throw ParseError("container: array '" + name + "' is " + dtype_name(e.dtype) + ", expected u8");
    return std::get<std::vector<std::uint8_t>>(e.data);
}

const std::vector<std::size_t>& ArrayContainer::shape(const std::string& name) const {
    return entry(name).shape;
}

std::vector<std::string> ArrayContainer::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

std::string ArrayContainer::meta_or(const std::string& key, const std::string& fallback) const {
    auto it = metadata_.find(key);
    return it == metadata_.end() ? fallback : it->second;
}

void ArrayContainer::save(const std::filesystem::path& path) const {
    nlohmann::json header;
    header["format"] = "boxlab-container";
    header["version"] = 1;
    header["metadata"] = metadata_;

    std::uint64_t offset = 0;
    nlohmann::json dir = nlohmann::json::array();
    for (const auto& e : entries_) {
        const std::size_t nbytes = shape_count(e.shape) * dtype_size(e.dtype);
        dir.push_back({{"name", e.name},
                       {"dtype", dtype_name(e.dtype)},
                       {"shape", e.shape},
                       {"offset", offset},
                       {"nbytes", nbytes}});
        offset += nbytes;
    }
    header["arrays"] = dir;

    const std::string htxt = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("container: cannot open for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t hlen = htxt.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htxt.data(), static_cast<std::streamsize>(htxt.size()));
    for (const auto& e : entries_) {
        std::visit(
            [&](const auto& v) {
                using T = typename std::decay_t<decltype(v)>::value_type;
                out.write(reinterpret_cast<const char*>(v.data()),
                          static_cast<std::streamsize>(v.size() * sizeof(T)));
            },
            e.data);
    }
    if (!out) throw IoError("container: write failed: " + path.string());
}

ArrayContainer ArrayContainer::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("container: cannot open for reading: " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("container: bad magic in " + path.string());
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!in) throw ParseError("container: truncated header length in " + path.string());
    std::string htxt(hlen, '\0');
    in.read(htxt.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw ParseError("container: truncated header in " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(htxt);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("container: header is not valid JSON in " + path.string() + ": " + e.what());
    }

    ArrayContainer c;
    if (header.contains("metadata"))
        c.metadata_ = header.at("metadata").get<std::map<std::string, std::string>>();

    if (!header.contains("arrays"))
        throw ParseError("container: header missing 'arrays' in " + path.string());
    const std::streampos payload_start = in.tellg();
    for (const auto& a : header.at("arrays")) {
        const std::string name = a.at("name").get<std::string>();
        const Dtype dt = dtype_from(a.at("dtype").get<std::string>(), name);
        auto shape = a.at("shape").get<std::vector<std::size_t>>();
        const std::uint64_t off = a.at("offset").get<std::uint64_t>();
        const std::uint64_t nbytes = a.at("nbytes").get<std::uint64_t>();
        const std::size_t count = shape_count(shape);
        if (count * dtype_size(dt) != nbytes)
            throw ParseError("container: array '" + name + "' nbytes does not match shape in " +
                             path.string());
        in.seekg(payload_start + static_cast<std::streamoff>(off));
        Entry e{name, dt, std::move(shape), {}};
        switch (dt) {
        case Dtype::F32: {
            std::vector<float> v(count);
            in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(nbytes));
            e.data = std::move(v);
            break;
        }
        case Dtype::F64: {
            std::vector<double> v(count);
            in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(nbytes));
            e.data = std::move(v);
            break;
        }
        case Dtype::I32: {
            std::vector<std::int32_t> v(count);
            in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(nbytes));
            e.data = std::move(v);
            break;
        }
        case Dtype::U8: {
            std::vector<std::uint8_t> v(count);
            in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(nbytes));
            e.data = std::move(v);
            break;
        }
        }
        if (!in) throw ParseError("container: truncated payload for array '" + name + "' in " + path.string());
        c.entries_.push_back(std::move(e));
    }
    return c;
}

Eigen::MatrixXd get_matrix(const ArrayContainer& c, const std::string& name) {
    const auto& v = c.f32(name);
    const auto& shape = c.shape(name);
    if (shape.size() != 2)
        throw ParseError("container: array '" + name + "' is not 2-d");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1]));
    for (std::size_t r = 0; r < shape[0]; ++r)
        for (std::size_t col = 0; col < shape[1]; ++col)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) =
                static_cast<double>(v[r * shape[1] + col]);
    return m;
}

void put_matrix(ArrayContainer& c, const std::string& name, const Eigen::MatrixXd& m) {
    std::vector<float> v(static_cast<std::size_t>(m.rows()) * static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index col = 0; col < m.cols(); ++col)
            v[static_cast<std::size_t>(r) * m.cols() + col] = static_cast<float>(m(r, col));
    c.put_f32(name, std::move(v),
              {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
}

Eigen::MatrixXd get_matrix64(const ArrayContainer& c, const std::string& name) {
    const auto& v = c.f64(name);
    const auto& shape = c.shape(name);
    if (shape.size() != 2)
        throw ParseError("container: array '" + name + "' is not 2-d");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1]));
    for (std::size_t r = 0; r < shape[0]; ++r)
        for (std::size_t col = 0; col < shape[1]; ++col)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = v[r * shape[1] + col];
    return m;
}

void put_matrix64(ArrayContainer& c, const std::string& name, const Eigen::MatrixXd& m) {
    std::vector<double> v(static_cast<std::size_t>(m.rows()) * static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index col = 0; col < m.cols(); ++col)
            v[static_cast<std::size_t>(r) * m.cols() + col] = m(r, col);
    c.put_f64(name, std::move(v),
              {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
}

std::vector<int> get_ivec(const ArrayContainer& c, const std::string& name) {
    const auto& v = c.i32(name);
    return std::vector<int>(v.begin(), v.end());
}

void put_ivec(ArrayContainer& c, const std::string& name, const std::vector<int>& v) {
    std::vector<std::int32_t> out(v.begin(), v.end());
    c.put_i32(name, std::move(out), {v.size()});
}

} // namespace boxlab
