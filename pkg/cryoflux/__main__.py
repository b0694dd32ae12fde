import cryoflux

if __name__ == '__main__':
    cryoflux.main()
