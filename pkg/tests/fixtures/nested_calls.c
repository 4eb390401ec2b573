#include <arm_neon.h>

void axpy4(int32_t *dst, const int32_t *a, const int32_t *b) {
    vst1q_s32(dst,
              vaddq_s32(vld1q_s32(a),
                        vmulq_s32(vld1q_s32(b), vdupq_n_s32(3))));
}

uint32x4_t eq_then_and(int32x4_t a, int32x4_t b, uint32x4_t m) {
    return vandq_u32(vceqq_s32(a, b), m);
}
