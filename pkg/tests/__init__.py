# c3py tests
