# Tests module init
