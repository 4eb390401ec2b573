#include <arm_neon.h>

uint8x16_t rev_bytes_bits(const uint8_t *p) {
    uint8x16_t v = vld1q_u8(p);
    return vrbitq_u8(v);
}

int8x8_t rev_signed(int8x8_t v) { return vrbit_s8(v); }

uint16x8_t shifts(uint16x8_t v) {
    return vshrq_n_u16(vshlq_n_u16(v, 3), 16);
}
