# Scripts package for williamson-copulas
