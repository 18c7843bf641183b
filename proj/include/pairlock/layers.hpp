#ifndef PAIRLOCK_LAYERS_HPP
#define PAIRLOCK_LAYERS_HPP

#include <vector>

#include "pairlock/rng.hpp"
#include "pairlock/tensor.hpp"

namespace pairlock {

// All spatial tensors are [C, H, W]. Backward functions take the upstream
// gradient dy and return gradients matching the forward inputs; every
// backward is checked against central finite differences in the tests.

struct ConvGrads {
  Tensor dx, dw, db;
};

// Cross-correlation with zero padding. w is [C_out, C_in, kh, kw].
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding);
ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, int stride, int padding, const Tensor& dy);

// Adjoint of conv2d. w is [C_in, C_out, kh, kw]; output spatial dims are
// (H-1)*stride + kh.
Tensor transposed_conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride);
ConvGrads transposed_conv2d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& dy);

struct MaxPoolResult {
  Tensor y;
  std::vector<size_t> argmax;  // flat input index per output element
};
MaxPoolResult max_pool2d_forward(const Tensor& x, int k, int stride);
Tensor max_pool2d_backward(const Tensor& x, const MaxPoolResult& fwd, const Tensor& dy);

Tensor adaptive_average_pool2d_forward(const Tensor& x, int out_h, int out_w);
Tensor adaptive_average_pool2d_backward(const std::vector<int>& x_shape, const Tensor& dy);

// y = w * x + b with w [M, N], x [N].
Tensor fully_connected_forward(const Tensor& x, const Tensor& w, const Tensor& b);
ConvGrads fully_connected_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);
Tensor sigmoid_forward(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);  // takes forward output

struct DropoutResult {
  Tensor y;
  Tensor mask;  // 0 or 1/(1-rate); identity mask when not training
};
DropoutResult dropout_forward(const Tensor& x, double rate, bool training, Rng& rng);
Tensor dropout_backward(const DropoutResult& fwd, const Tensor& dy);

// Nearest-neighbour 2x upsampling and its adjoint.
Tensor upsample_nearest2_forward(const Tensor& x);
Tensor upsample_nearest2_backward(const std::vector<int>& x_shape, const Tensor& dy);

// Bilinear resize to exact output dims (half-pixel centers, edge clamp).
Tensor resize_bilinear_forward(const Tensor& x, int out_h, int out_w);
Tensor resize_bilinear_backward(const std::vector<int>& x_shape, const Tensor& dy);

struct SoftmaxXentResult {
  double loss = 0.0;
  Tensor probs;
  Tensor dlogits;  // probs - target
};
// Max-subtraction stabilized; loss = -sum target * log(probs).
SoftmaxXentResult softmax_cross_entropy(const Tensor& logits, const Tensor& target_one_hot);

struct FrobeniusResult {
  double loss = 0.0;
  Tensor dpred;  // (pred - target)/loss, or zeros at the zero-loss point
};
FrobeniusResult frobenius_loss(const Tensor& pred, const Tensor& target);

}  // namespace pairlock

#endif  // PAIRLOCK_LAYERS_HPP
