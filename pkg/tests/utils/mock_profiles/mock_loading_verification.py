IS_LOADED = "model profile"
