#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>
#include <type_traits>

#include <Eigen/Core>

namespace ccsi {

/// 64-bit FNV-1a over a canonical byte stream.
class ContentHasher {
public:
    void bytes(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    ContentHasher& add(T v) {
        bytes(&v, sizeof(T));
        return *this;
    }

    ContentHasher& add(std::string_view s) {
        add<std::uint64_t>(s.size());
        bytes(s.data(), s.size());
        return *this;
    }

    template <typename Derived>
    ContentHasher& add_matrix(const Eigen::DenseBase<Derived>& m) {
        add<std::int64_t>(m.rows());
        add<std::int64_t>(m.cols());
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                const auto v = m(r, c);
                bytes(&v, sizeof(v));
            }
        return *this;
    }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace ccsi
