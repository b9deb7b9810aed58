#pragma once

// Feed-forward CNN inference for the subdomain surrogate.
//
// A model is an ordered list of layers tagged with a branch: first the
// shared encoder (convolutions, then fully connected latent layers), then
// the vx decoder branch, then the vy decoder branch. Both branches start
// from the output of the shared part and must end in a 1 x H x W map.
//
// Tensors are float32 in [channel][row][column] order. Each output element
// is accumulated in double from exact float products and rounded back to
// float once, which keeps results independent of summation order up to the
// final rounding.

#include "flowdd/usds/solver.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace flowdd::usds {

enum class LayerKind : std::uint8_t { Conv = 1, FullyConnected = 2, TransposedConv = 3 };
enum class Branch : std::uint8_t { Shared = 0, Vx = 1, Vy = 2 };

struct TensorShape {
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(channels) * height * width;
    }
    bool operator==(const TensorShape&) const = default;
};

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    Branch branch = Branch::Shared;
    bool relu = true;

    // Conv / TransposedConv
    std::uint32_t in_channels = 0;
    std::uint32_t out_channels = 0;
    std::uint32_t kernel_h = 1;
    std::uint32_t kernel_w = 1;
    std::uint32_t stride_h = 1;
    std::uint32_t stride_w = 1;
    std::uint32_t pad_h = 0;
    std::uint32_t pad_w = 0;

    // FullyConnected: flattened input size and the shape its output is
    // reshaped to (out_shape.size() outputs).
    std::uint32_t in_dim = 0;
    TensorShape out_shape{};

    std::size_t weight_count() const noexcept;
    std::size_t bias_count() const noexcept;

    static LayerSpec conv(Branch b, std::uint32_t in, std::uint32_t out, std::uint32_t k, std::uint32_t stride,
                          std::uint32_t pad, bool relu = true);
    static LayerSpec tconv(Branch b, std::uint32_t in, std::uint32_t out, std::uint32_t k, std::uint32_t stride,
                           std::uint32_t pad, bool relu = true);
    static LayerSpec fc(Branch b, std::uint32_t in_dim, TensorShape out, bool relu = true);

    bool operator==(const LayerSpec&) const = default;
};

struct Layer {
    LayerSpec spec;
    std::vector<float> weights;  ///< [out][in][kh][kw] or [out][in]
    std::vector<float> bias;     ///< [out]

    bool operator==(const Layer&) const = default;
};

/// Output shape of `spec` applied to `in`; throws Model if they do not fit.
TensorShape output_shape(const LayerSpec& spec, const TensorShape& in);

class CnnModel {
public:
    /// Validates the topology and the dimension chain (Model error otherwise).
    CnnModel(TensorShape input, std::vector<Layer> layers);

    const TensorShape& input_shape() const noexcept { return input_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::size_t parameter_count() const noexcept;

    bool operator==(const CnnModel&) const = default;

private:
    TensorShape input_;
    std::vector<Layer> layers_;
};

/// Throws Model describing the first inconsistency, if any.
void validate_topology(const TensorShape& input, const std::vector<LayerSpec>& specs);

/// Default architecture for 3 x 128 x 256 inputs: stride-2 convolutions
/// 3 -> 64 -> 128 -> 256, a stride-1 convolution 256 -> 16, latent FC 1024,
/// FC back to 16 x 16 x 32, then per branch 4 transposed convolutions to
/// 1 x 128 x 256 with a linear last layer.
std::vector<LayerSpec> default_architecture(std::uint32_t height = 128, std::uint32_t width = 256);

/// Model with uniform random weights in [-a, a], a = 1/sqrt(fan_in).
CnnModel random_model(const TensorShape& input, const std::vector<LayerSpec>& specs, std::uint64_t seed);

/// Raw forward pass. `input` has input_shape().size() elements. Returns the
/// two branch outputs (vx, vy). Throws Numeric naming the layer index on a
/// non-finite activation.
std::array<std::vector<float>, 2> forward_tensor(const CnnModel& model, const std::vector<float>& input);

/// Stacks (SDF, band vx, band vy) into a 3 x H x W float tensor.
std::vector<float> input_tensor(const SolverInput& input);

/// Raw network output as a velocity field, before mask / band / constraint.
VelocityField cnn_forward(const CnnModel& model, const SolverInput& input);

/// 64-bit FNV-1a over the little-endian bytes of the float values.
std::uint64_t tensor_hash(const std::vector<float>& a, const std::vector<float>& b);

class CnnSolver final : public SubdomainSolver {
public:
    CnnSolver(std::shared_ptr<const CnnModel> model, bool constrained)
        : SubdomainSolver(constrained), model_(std::move(model)) {}

    std::string name() const override { return flow_rate_constraint() ? "cnn-constrained" : "cnn"; }

protected:
    VelocityField predict(const SolverInput& input) const override { return cnn_forward(*model_, input); }

private:
    std::shared_ptr<const CnnModel> model_;
};

}  // namespace flowdd::usds
