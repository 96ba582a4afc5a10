// placeholder, replaced by the acceptance suite
int main() { return 1; }
