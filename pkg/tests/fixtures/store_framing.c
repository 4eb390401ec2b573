#include <arm_neon.h>

int32_t buf[8] = { 0 };

void store_middle(int32x4_t v) {
    vst1q_s32(buf + 2, v);   /* exactly four lanes, nothing past buf[5] */
}
