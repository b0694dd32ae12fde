#!/usr/bin/env python3

import cryoflux

if __name__ == "__main__":
    cryoflux.main()
