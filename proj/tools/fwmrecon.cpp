#include "fwm/app.hpp"

int main(int argc, char** argv) { return fwm::app::run(argc, argv); }
