int parsePort(String raw) {
  try {
    return Integer.parseInt(raw);
  } catch (NumberFormatException e) {
    log.warn("Invalid port {}", raw, e);
    return -1;
  }
}