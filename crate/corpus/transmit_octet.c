extern void transmit_bit(uint8_t b);

void transmit_octet(const uint8_t octet) {
  uint8_t mask = 1U;
  for (uint8_t bit = 0; bit < 8; ++bit) {
    transmit_bit(octet & mask);
    mask <<= 1U;
  }
}
