#pragma once

#include "tensor.hpp"

namespace deqpocs {

/*
 * Orthonormal 2-D DFT of every channel with the zero frequency at index
 * (H/2, W/2). Both directions scale by 1/sqrt(HW), so the pair is unitary.
 */
ComplexTensor fft2_centered(ComplexTensor const &x);
ComplexTensor ifft2_centered(ComplexTensor const &X);

} // namespace deqpocs
