#include "cwan/model.hpp"

#include "cwan/colorspace.hpp"

namespace cwan {

SrgbImage enhance(Cwan<float>& model, const SrgbImage& img) {
    const LabImage lab = rgb_to_lab(img);
    Tensor<float> x_l = lightness_tensor(lab);
    Tensor<float> x_ab = ab_tensor(lab);

    typename CwanL<float>::Acts lacts;
    Tensor<float> y_l = model.l.forward(x_l, lacts);
    clamp01(y_l);

    typename CwanAb<float>::Acts abacts;
    model.ab.forward(x_ab, abacts);
    Tensor<float> y_ab = abacts.enh.ab_out;
    clamp01(y_ab);

    return lab_to_rgb(lab_from_tensors(y_l, y_ab));
}

} // namespace cwan
