#include <iostream>

int main() {
    std::cout << "wwbie: placeholder\n";
    return 0;
}
