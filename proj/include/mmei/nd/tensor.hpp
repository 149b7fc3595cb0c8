#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mmei::nd {

using Shape = std::vector<std::size_t>;
using NodeId = std::int64_t;

inline constexpr NodeId kUntracked = -1;

class Tape;

std::size_t element_count(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. A tensor is either a plain value or a
/// handle to a node recorded on a Tape; in the latter case the tape must
/// outlive every use of the tensor in an op or in backward().
class Tensor {
public:
    Tensor() = default;

    /// Trusts the caller on finiteness; length must match the shape.
    Tensor(Shape shape, std::vector<double> data);

    /// Validating constructor for data coming from files or the CLI.
    static Tensor from_external(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    static Tensor row(std::vector<double> values);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    /// Mutable access drops any tape binding: the result is a plain value.
    std::vector<double>& mutable_values();

    double at(std::size_t i) const { return data_.at(i); }
    double at(std::size_t r, std::size_t c) const;
    double item() const;

    bool tracked() const noexcept { return tape_ != nullptr; }
    Tape* tape() const noexcept { return tape_; }
    NodeId node() const noexcept { return node_; }

    /// Copy of the values without the tape binding.
    Tensor detached() const { return Tensor(shape_, data_); }

    bool all_finite() const noexcept;

private:
    friend class Tape;

    Shape shape_;
    std::vector<double> data_;
    Tape* tape_ = nullptr;
    NodeId node_ = kUntracked;
};

bool same_values(const Tensor& a, const Tensor& b);

}  // namespace mmei::nd
