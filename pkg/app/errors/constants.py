EXIT_INPUT_ERROR = 1
EXIT_INTERNAL_ERROR = 2
